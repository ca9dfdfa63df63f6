//! REINFORCE policy over permutation groups.
//!
//! The policy reads a grouped difficulty summary (two features per group)
//! and emits a categorical distribution over the groups. Actions are drawn
//! either from that distribution, uniformly, or from its complement
//! (probability proportional to `1 − π`); only actions drawn from the
//! learned distribution may be used for a policy update, since the REINFORCE
//! estimator is on-policy. One update performs a single Adam step on the
//! score-function gradient with an entropy bonus, against a scalar
//! exponential-moving-average baseline that is updated *after* computing the
//! advantage.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nncore::{
    adam_step, entropy, softmax_row, Activation, AdamState, DenseLayer, Matrix, NncoreError,
    ParamStore, RngState, PROB_FLOOR,
};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid policy config: {0}")]
    InvalidConfig(String),

    #[error("policy update requires actions sampled in {expected} mode, got {found}")]
    ModeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("feature vector has length {found}, policy expects {expected}")]
    FeatureLength { expected: usize, found: usize },

    #[error("action {action} is out of range for {groups} groups")]
    ActionRange { action: usize, groups: usize },

    #[error(transparent)]
    Nncore(#[from] NncoreError),
}

/// How episode actions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Sample from the policy distribution.
    Learned,
    /// Ignore the policy; sample uniformly.
    Uniform,
    /// Sample proportional to `1 − π`: prefer what the policy avoids.
    Inverse,
}

impl SamplingMode {
    pub fn label(&self) -> &'static str {
        match self {
            SamplingMode::Learned => "learned",
            SamplingMode::Uniform => "uniform",
            SamplingMode::Inverse => "inverse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Number of permutation groups (action space size).
    pub n_groups: usize,
    pub hidden_dim: usize,
    pub lr: f64,
    pub entropy_weight: f64,
    /// EMA factor for the reward baseline.
    pub baseline_decay: f64,
    /// Discount for future episodes. Updates here are single-step, so the
    /// return equals the immediate reward and this value is inert; it is
    /// kept explicit so the update rule reads like the estimator it is.
    pub gamma: f64,
}

impl PolicyConfig {
    pub fn new(n_groups: usize) -> Self {
        Self {
            n_groups,
            hidden_dim: 16,
            lr: 0.01,
            entropy_weight: 0.01,
            baseline_decay: 0.9,
            gamma: 1.0,
        }
    }

    /// Length of the expected feature vector (two features per group).
    pub fn feature_dim(&self) -> usize {
        2 * self.n_groups
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let mut problems = Vec::new();
        if self.n_groups < 2 {
            problems.push("need at least two groups".to_string());
        }
        if self.hidden_dim == 0 {
            problems.push("hidden_dim must be positive".to_string());
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            problems.push(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.entropy_weight.is_finite() && self.entropy_weight >= 0.0) {
            problems.push(format!(
                "entropy_weight must be non-negative, got {}",
                self.entropy_weight
            ));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            problems.push(format!(
                "baseline_decay must be in [0, 1), got {}",
                self.baseline_decay
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            problems.push(format!("gamma must be in [0, 1], got {}", self.gamma));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(PolicyError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// A batch of sampled actions plus the distributions they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSample {
    pub mode: SamplingMode,
    pub features: Vec<f64>,
    pub actions: Vec<usize>,
    /// Policy distribution at sampling time.
    pub policy_probs: Vec<f64>,
    /// Distribution the actions were actually drawn from (equals
    /// `policy_probs` in learned mode).
    pub sample_probs: Vec<f64>,
    /// Log-probability of each action under `sample_probs`.
    pub log_probs: Vec<f64>,
}

/// Outcome of one policy update, for logging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyUpdate {
    pub reward: f64,
    pub baseline_before: f64,
    pub baseline_after: f64,
    pub advantage: f64,
    pub entropy: f64,
}

/// Descent direction on the logits for one REINFORCE step: the negated
/// gradient of `advantage · Σ_a counts_a · ln π_a + entropy_weight · H(π)`.
pub fn reinforce_logit_grad(
    probs: &[f64],
    counts: &[f64],
    advantage: f64,
    entropy_weight: f64,
) -> Vec<f64> {
    let k: f64 = counts.iter().sum();
    let h = entropy(probs);
    probs
        .iter()
        .zip(counts)
        .map(|(&p, &c)| {
            let score = advantage * (c - k * p);
            let entropy_term = -p * (p.max(PROB_FLOOR).ln() + h);
            -(score + entropy_weight * entropy_term)
        })
        .collect()
}

/// Two-layer softmax policy with its own parameters, optimizer state, and
/// reward baseline.
#[derive(Debug)]
pub struct PolicyNet {
    config: PolicyConfig,
    fc1: DenseLayer,
    fc2: DenseLayer,
    store: ParamStore,
    adam: AdamState,
}

const BASELINE_TENSOR: &str = "policy.baseline";

impl PolicyNet {
    pub fn new(config: PolicyConfig, seed: u64) -> Result<Self, PolicyError> {
        config.validate()?;
        let fc1 = DenseLayer::new(
            "policy.fc1",
            config.feature_dim(),
            config.hidden_dim,
            Activation::Tanh,
        );
        let fc2 = DenseLayer::new(
            "policy.fc2",
            config.hidden_dim,
            config.n_groups,
            Activation::Linear,
        );
        let mut store = ParamStore::new();
        let mut rng = RngState::for_subsystem(seed, "policy-init");
        fc1.register(&mut store, &mut rng)?;
        fc2.register(&mut store, &mut rng)?;
        // The baseline rides along as a 1×1 tensor so checkpoints carry it;
        // its gradient is always zero, so the optimizer never touches it.
        store.register(BASELINE_TENSOR, Matrix::zeros(1, 1))?;
        let adam = AdamState::new(&store);
        Ok(Self {
            config,
            fc1,
            fc2,
            store,
            adam,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn baseline(&self) -> f64 {
        self.store.value(BASELINE_TENSOR).values()[0]
    }

    fn set_baseline(&mut self, v: f64) {
        self.store.value_mut(BASELINE_TENSOR).values_mut()[0] = v;
    }

    /// Policy distribution for one feature vector.
    pub fn probs(&self, features: &[f64]) -> Result<Vec<f64>, PolicyError> {
        if features.len() != self.config.feature_dim() {
            return Err(PolicyError::FeatureLength {
                expected: self.config.feature_dim(),
                found: features.len(),
            });
        }
        let input = Matrix::row_vector(features);
        let h = self.fc1.forward(&self.store, &input);
        let logits = self.fc2.forward(&self.store, &h.output);
        Ok(softmax_row(logits.output.row(0)))
    }

    /// Distribution actually sampled from in the given mode.
    fn sampling_distribution(&self, policy_probs: &[f64], mode: SamplingMode) -> Vec<f64> {
        let n = policy_probs.len();
        match mode {
            SamplingMode::Learned => policy_probs.to_vec(),
            SamplingMode::Uniform => vec![1.0 / n as f64; n],
            SamplingMode::Inverse => {
                // Σ (1 − π) = n − 1, which is positive because n ≥ 2.
                policy_probs
                    .iter()
                    .map(|&p| (1.0 - p) / (n as f64 - 1.0))
                    .collect()
            }
        }
    }

    /// Draws `k` independent actions in the given mode.
    pub fn sample_actions(
        &self,
        features: &[f64],
        k: usize,
        mode: SamplingMode,
        rng: &mut RngState,
    ) -> Result<ActionSample, PolicyError> {
        let policy_probs = self.probs(features)?;
        let sample_probs = self.sampling_distribution(&policy_probs, mode);
        let mut actions = Vec::with_capacity(k);
        let mut log_probs = Vec::with_capacity(k);
        for _ in 0..k {
            let action = draw_categorical(&sample_probs, rng);
            log_probs.push(sample_probs[action].max(PROB_FLOOR).ln());
            actions.push(action);
        }
        Ok(ActionSample {
            mode,
            features: features.to_vec(),
            actions,
            policy_probs,
            sample_probs,
            log_probs,
        })
    }

    /// One REINFORCE step from a learned-mode sample and its observed
    /// reward. The advantage uses the pre-update baseline; the baseline then
    /// absorbs the new reward.
    pub fn update(
        &mut self,
        sample: &ActionSample,
        reward: f64,
    ) -> Result<PolicyUpdate, PolicyError> {
        if sample.mode != SamplingMode::Learned {
            return Err(PolicyError::ModeMismatch {
                expected: SamplingMode::Learned.label(),
                found: sample.mode.label(),
            });
        }
        if sample.features.len() != self.config.feature_dim() {
            return Err(PolicyError::FeatureLength {
                expected: self.config.feature_dim(),
                found: sample.features.len(),
            });
        }
        let mut counts = vec![0.0; self.config.n_groups];
        for &a in &sample.actions {
            if a >= self.config.n_groups {
                return Err(PolicyError::ActionRange {
                    action: a,
                    groups: self.config.n_groups,
                });
            }
            counts[a] += 1.0;
        }

        // Forward at the current parameters, which are the sampling-time
        // parameters: the caller performs at most one update per sample.
        let input = Matrix::row_vector(&sample.features);
        let h = self.fc1.forward(&self.store, &input);
        let logits_cache = self.fc2.forward(&self.store, &h.output);
        let probs = softmax_row(logits_cache.output.row(0));

        let baseline_before = self.baseline();
        let advantage = sample.stepped_return(self.config.gamma, reward) - baseline_before;
        let d_logits = Matrix::row_vector(&reinforce_logit_grad(
            &probs,
            &counts,
            advantage,
            self.config.entropy_weight,
        ));

        self.store.zero_grads();
        let d_h = self.fc2.backward(&mut self.store, &logits_cache, &d_logits);
        self.fc1.backward(&mut self.store, &h, &d_h);
        adam_step(
            &mut self.store,
            &mut self.adam,
            self.config.lr,
            0.9,
            0.999,
            1e-8,
        )?;

        let baseline_after = self.config.baseline_decay * baseline_before
            + (1.0 - self.config.baseline_decay) * reward;
        self.set_baseline(baseline_after);

        Ok(PolicyUpdate {
            reward,
            baseline_before,
            baseline_after,
            advantage,
            entropy: entropy(&probs),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        self.store.save(path)?;
        Ok(())
    }

    /// Loads parameters (and the embedded baseline) into a net built with
    /// the same config.
    pub fn load_into(&mut self, path: &Path) -> Result<(), PolicyError> {
        self.store.load_into(path)?;
        Ok(())
    }
}

impl ActionSample {
    /// Single-step discounted return: with one reward per episode this is
    /// `gamma^0 · reward`.
    fn stepped_return(&self, _gamma: f64, reward: f64) -> f64 {
        reward
    }
}

/// Inverse-CDF draw from a categorical distribution. Probabilities are
/// assumed non-negative; any rounding slack goes to the last entry.
fn draw_categorical(probs: &[f64], rng: &mut RngState) -> usize {
    let u = rng.next_f64();
    let mut cdf = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cdf += p;
        if u < cdf {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::grad_check;

    fn test_config(n_groups: usize) -> PolicyConfig {
        PolicyConfig::new(n_groups)
    }

    fn features(n_groups: usize) -> Vec<f64> {
        (0..2 * n_groups).map(|i| 0.1 * i as f64 - 0.3).collect()
    }

    #[test]
    fn fresh_policy_with_zeroed_output_layer_is_uniform() {
        let mut net = PolicyNet::new(test_config(6), 1).unwrap();
        net.store.value_mut("policy.fc2.w").fill(0.0);
        net.store.value_mut("policy.fc2.b").fill(0.0);
        let probs = net.probs(&features(6)).unwrap();
        for p in &probs {
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
        }
        assert!((entropy(&probs) - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn probabilities_form_a_distribution() {
        let net = PolicyNet::new(test_config(5), 2).unwrap();
        let probs = net.probs(&features(5)).unwrap();
        assert_eq!(probs.len(), 5);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(probs.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn inverse_mode_prefers_what_the_policy_avoids() {
        let net = PolicyNet::new(test_config(2), 3).unwrap();
        let q = net.sampling_distribution(&[0.9, 0.1], SamplingMode::Inverse);
        assert!((q[0] - 0.1).abs() < 1e-12);
        assert!((q[1] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn uniform_mode_sampling_frequencies_are_flat() {
        let net = PolicyNet::new(test_config(6), 4).unwrap();
        let mut rng = RngState::new(5);
        let sample = net
            .sample_actions(&features(6), 30_000, SamplingMode::Uniform, &mut rng)
            .unwrap();
        let mut counts = vec![0usize; 6];
        for &a in &sample.actions {
            counts[a] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / 30_000.0;
            assert!((freq - 1.0 / 6.0).abs() < 0.02, "freq {freq}");
        }
        // Log-probs must reflect the uniform sampling distribution.
        for &lp in &sample.log_probs {
            assert!((lp - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn learned_mode_sampling_matches_policy_probs() {
        let net = PolicyNet::new(test_config(4), 6).unwrap();
        let f = features(4);
        let probs = net.probs(&f).unwrap();
        let mut rng = RngState::new(7);
        let sample = net
            .sample_actions(&f, 40_000, SamplingMode::Learned, &mut rng)
            .unwrap();
        let mut counts = vec![0usize; 4];
        for &a in &sample.actions {
            counts[a] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / 40_000.0;
            assert!((freq - probs[i]).abs() < 0.02, "group {i}: {freq} vs {}", probs[i]);
        }
    }

    #[test]
    fn zero_actions_yield_empty_sample() {
        let net = PolicyNet::new(test_config(3), 8).unwrap();
        let mut rng = RngState::new(9);
        let sample = net
            .sample_actions(&features(3), 0, SamplingMode::Learned, &mut rng)
            .unwrap();
        assert!(sample.actions.is_empty());
        assert!(sample.log_probs.is_empty());
    }

    #[test]
    fn update_rejects_off_policy_samples() {
        let mut net = PolicyNet::new(test_config(3), 10).unwrap();
        let mut rng = RngState::new(11);
        for mode in [SamplingMode::Uniform, SamplingMode::Inverse] {
            let sample = net
                .sample_actions(&features(3), 4, mode, &mut rng)
                .unwrap();
            assert!(matches!(
                net.update(&sample, 0.5).unwrap_err(),
                PolicyError::ModeMismatch { .. }
            ));
        }
    }

    #[test]
    fn positive_advantage_raises_the_actions_probability() {
        let mut net = PolicyNet::new(test_config(4), 12).unwrap();
        let f = features(4);
        let before = net.probs(&f).unwrap();
        let sample = ActionSample {
            mode: SamplingMode::Learned,
            features: f.clone(),
            actions: vec![2, 2, 2],
            policy_probs: before.clone(),
            sample_probs: before.clone(),
            log_probs: vec![before[2].max(PROB_FLOOR).ln(); 3],
        };
        let update = net.update(&sample, 1.0).unwrap();
        assert!(update.advantage > 0.0);
        let after = net.probs(&f).unwrap();
        assert!(
            after[2] > before[2],
            "π(2) did not increase: {} -> {}",
            before[2],
            after[2]
        );
    }

    #[test]
    fn zero_advantage_without_entropy_bonus_changes_nothing() {
        let mut config = test_config(4);
        config.entropy_weight = 0.0;
        let mut net = PolicyNet::new(config, 13).unwrap();
        let f = features(4);
        let before = net.store.snapshot_values();
        let sample = ActionSample {
            mode: SamplingMode::Learned,
            features: f.clone(),
            actions: vec![0, 1],
            policy_probs: net.probs(&f).unwrap(),
            sample_probs: net.probs(&f).unwrap(),
            log_probs: vec![0.0; 2],
        };
        // Baseline starts at zero, so reward zero gives advantage zero.
        let update = net.update(&sample, 0.0).unwrap();
        assert_eq!(update.advantage, 0.0);
        let after = net.store.snapshot_values();
        for (a, b) in before.iter().zip(&after) {
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn baseline_updates_after_advantage_is_taken() {
        let mut net = PolicyNet::new(test_config(3), 14).unwrap();
        let f = features(3);
        let mut rng = RngState::new(15);
        let sample = net
            .sample_actions(&f, 2, SamplingMode::Learned, &mut rng)
            .unwrap();
        let update = net.update(&sample, 1.0).unwrap();
        assert_eq!(update.baseline_before, 0.0);
        assert_eq!(update.advantage, 1.0);
        assert!((update.baseline_after - 0.1).abs() < 1e-12);
        assert!((net.baseline() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn save_load_round_trips_parameters_and_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.ckpt");
        let mut net = PolicyNet::new(test_config(3), 16).unwrap();
        let f = features(3);
        let mut rng = RngState::new(17);
        let sample = net
            .sample_actions(&f, 4, SamplingMode::Learned, &mut rng)
            .unwrap();
        net.update(&sample, 0.7).unwrap();
        net.save(&path).unwrap();

        let mut restored = PolicyNet::new(test_config(3), 999).unwrap();
        restored.load_into(&path).unwrap();
        assert_eq!(restored.baseline(), net.baseline());
        assert_eq!(restored.probs(&f).unwrap(), net.probs(&f).unwrap());
    }

    #[test]
    fn reinforce_gradient_matches_finite_differences() {
        let mut net = PolicyNet::new(test_config(4), 18).unwrap();
        let f = features(4);
        let counts = vec![2.0, 0.0, 1.0, 0.0];
        let advantage = 0.37;
        let entropy_weight = 0.01;
        let fc1 = net.fc1.clone();
        let fc2 = net.fc2.clone();

        let report = grad_check(
            &mut net.store,
            |store, accumulate| {
                let input = Matrix::row_vector(&f);
                let h = fc1.forward(store, &input);
                let logits = fc2.forward(store, &h.output);
                let probs = softmax_row(logits.output.row(0));
                let score: f64 = probs
                    .iter()
                    .zip(&counts)
                    .map(|(&p, &c)| c * p.max(PROB_FLOOR).ln())
                    .sum();
                let loss = -(advantage * score + entropy_weight * entropy(&probs));
                if accumulate {
                    let d_logits = Matrix::row_vector(&reinforce_logit_grad(
                        &probs,
                        &counts,
                        advantage,
                        entropy_weight,
                    ));
                    let d_h = fc2.backward(store, &logits, &d_logits);
                    fc1.backward(store, &h, &d_h);
                }
                loss
            },
            19,
        );
        assert!(
            report.passes(1e-6),
            "worst relative error {:.3e}",
            report.max_rel_error
        );
    }
}
