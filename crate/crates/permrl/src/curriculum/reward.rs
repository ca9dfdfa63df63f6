//! Episode reward from the improvement over an extrapolated error baseline.
//!
//! The baseline predicts what the next validation error would have been had
//! the recent trend simply continued: a linear extrapolation of the last two
//! observed errors, clamped to \[0, 1\]. The reward is the margin by which
//! the actual error beats that prediction, so merely riding the existing
//! trend earns zero and only above-trend improvement is credited.

/// Timeline of validation errors for one task, in observation order.
#[derive(Debug, Clone, Default)]
pub struct ErrorHistory {
    errors: Vec<f64>,
}

impl ErrorHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, error: f64) {
        debug_assert!((0.0..=1.0).contains(&error), "error {error} out of range");
        self.errors.push(error);
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.errors.last().copied()
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    /// Linear extrapolation of the next error from the two most recent
    /// observations, `2·E_t − E_{t−1}`, clamped to \[0, 1\]. With a single
    /// observation the prediction is a zero-order hold (`E_t` itself).
    ///
    /// Panics if the history is empty — callers must validate before an
    /// episode starts.
    pub fn baseline_prediction(&self) -> f64 {
        extrapolated_error(&self.errors)
    }
}

/// See [`ErrorHistory::baseline_prediction`].
pub fn extrapolated_error(errors: &[f64]) -> f64 {
    let last = *errors
        .last()
        .expect("baseline requires at least one observed error");
    let prev = if errors.len() >= 2 {
        errors[errors.len() - 2]
    } else {
        last
    };
    (2.0 * last - prev).clamp(0.0, 1.0)
}

/// Reward for one episode: predicted-minus-actual error. Positive when the
/// episode beat the extrapolated trend.
pub fn compute_reward(baseline: f64, actual_error: f64) -> f64 {
    baseline - actual_error
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn downward_trend_extrapolates_further_down() {
        let mut h = ErrorHistory::new();
        h.push(0.6);
        h.push(0.5);
        assert_eq!(h.baseline_prediction(), 0.4);
    }

    #[test]
    fn flat_history_predicts_itself() {
        let mut h = ErrorHistory::new();
        h.push(0.5);
        h.push(0.5);
        assert_eq!(h.baseline_prediction(), 0.5);
    }

    #[test]
    fn steep_drop_is_clamped_at_zero() {
        assert_eq!(extrapolated_error(&[0.9, 0.4]), 0.0);
    }

    #[test]
    fn steep_rise_is_clamped_at_one() {
        assert_eq!(extrapolated_error(&[0.2, 0.7]), 1.0);
    }

    #[test]
    fn single_observation_holds() {
        let mut h = ErrorHistory::new();
        h.push(0.42);
        assert_eq!(h.baseline_prediction(), 0.42);
    }

    #[test]
    fn only_recent_two_entries_matter() {
        assert_eq!(
            extrapolated_error(&[0.1, 0.9, 0.6, 0.5]),
            extrapolated_error(&[0.6, 0.5])
        );
    }

    #[test]
    #[should_panic(expected = "at least one observed error")]
    fn empty_history_panics() {
        extrapolated_error(&[]);
    }

    #[test]
    fn reward_is_margin_over_baseline() {
        assert!((compute_reward(0.4, 0.35) - 0.05).abs() < 1e-15);
        assert_eq!(compute_reward(0.4, 0.4), 0.0);
        assert!((compute_reward(0.4, 0.5) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn rewards_stay_in_unit_band() {
        for &(b, e) in &[(0.0, 1.0), (1.0, 0.0), (0.3, 0.8)] {
            let r = compute_reward(b, e);
            assert!((-1.0..=1.0).contains(&r));
        }
    }
}
