use super::params::ParamSet;
use crate::error::{Error, Result};

/// Adam moment estimates mirroring a [`ParamSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: ParamSet,
    pub second_moment: ParamSet,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(weights: &ParamSet) -> Self {
        Self {
            first_moment: weights.zeros_like(),
            second_moment: weights.zeros_like(),
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    weights: &mut ParamSet,
    gradients: &ParamSet,
    state: &mut AdamState,
    learning_rate: f64,
) -> Result<()> {
    if !weights.same_layout(gradients) || !weights.same_layout(&state.first_moment) {
        return Err(Error::ShapeMismatch("adam"));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let moments = state
        .first_moment
        .values_mut()
        .zip(state.second_moment.values_mut());
    for ((w, g), (m, v)) in weights.values_mut().zip(gradients.values()).zip(moments) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= learning_rate * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single(value: f64) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.push("w", &[1]);
        ps.fill(value);
        ps
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        let mut w = single(0.3);
        let g = single(0.0);
        let mut state = AdamState::new(&w);
        adam_step(&mut w, &g, &mut state, 0.1).unwrap();
        assert_eq!(w.get(0), &[0.3]);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut w = single(0.0);
        let g = single(1.0);
        let mut state = AdamState::new(&w);
        adam_step(&mut w, &g, &mut state, 0.1).unwrap();
        assert_abs_diff_eq!(w.get(0)[0], -0.1 / (1.0 + 1e-8), epsilon = 1e-15);
    }

    #[test]
    fn constant_positive_gradient_decreases_monotonically() {
        let mut w = single(1.0);
        let g = single(0.5);
        let mut state = AdamState::new(&w);
        let mut last = 1.0;
        for _ in 0..2 {
            adam_step(&mut w, &g, &mut state, 0.1).unwrap();
            assert!(w.get(0)[0] < last);
            last = w.get(0)[0];
        }
        // m_hat = g and v_hat = g^2 for a constant gradient, so each step is lr.
        assert_abs_diff_eq!(last, 1.0 - 0.2, epsilon = 1e-7);
    }

    #[test]
    fn layout_mismatch() {
        let mut w = single(0.0);
        let mut g = ParamSet::new();
        g.push("w", &[2]);
        let mut state = AdamState::new(&w);
        assert!(adam_step(&mut w, &g, &mut state, 0.1).is_err());
    }
}
