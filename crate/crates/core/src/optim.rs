//! Elementwise optimizers over flat parameter tables.
//!
//! `sgd_step` follows the ascent convention (`params + lr * grad`); callers
//! minimizing a loss pass the negated gradient. `AdamState::step` returns a
//! displacement that the caller adds or subtracts.

pub fn sgd_step(params: &[f64], grad: &[f64], lr: f64) -> Vec<f64> {
    assert_eq!(params.len(), grad.len(), "parameter/gradient length mismatch");
    params.iter().zip(grad).map(|(p, g)| p + lr * g).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lr: f64,
}

impl AdamState {
    pub const DEFAULT_BETA1: f64 = 0.9;
    pub const DEFAULT_BETA2: f64 = 0.999;
    pub const DEFAULT_EPS: f64 = 1e-8;

    pub fn new(len: usize, lr: f64) -> Self {
        Self::with_params(len, lr, Self::DEFAULT_BETA1, Self::DEFAULT_BETA2, Self::DEFAULT_EPS)
    }

    pub fn with_params(len: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1,
            beta2,
            eps,
            lr,
        }
    }

    /// Bias-corrected Adam displacement `lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, grad: &[f64]) -> Vec<f64> {
        assert_eq!(grad.len(), self.m.len(), "gradient length mismatch");
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let mut delta = Vec::with_capacity(grad.len());
        for ((m, v), &g) in self.m.iter_mut().zip(self.v.iter_mut()).zip(grad) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            delta.push(self.lr * m_hat / (v_hat.sqrt() + self.eps));
        }
        delta
    }
}

/// Value-style wrapper around [`AdamState::step`].
pub fn adam_step(state: &AdamState, grad: &[f64]) -> (Vec<f64>, AdamState) {
    let mut next = state.clone();
    let delta = next.step(grad);
    (delta, next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_examples() {
        assert_eq!(sgd_step(&[1.0, 2.0], &[0.0, 0.0], 0.3), vec![1.0, 2.0]);
        assert_eq!(sgd_step(&[0.0], &[3.0], 1.0), vec![3.0]);
        let half = sgd_step(&sgd_step(&[0.5], &[2.0], 0.25), &[2.0], 0.25);
        assert_eq!(half, sgd_step(&[0.5], &[2.0], 0.5));
    }

    #[test]
    fn adam_zero_gradient_is_still() {
        let (delta, state) = adam_step(&AdamState::new(3, 0.1), &[0.0; 3]);
        assert_eq!(delta, vec![0.0; 3]);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        let lr = 0.01;
        let (delta, _) = adam_step(&AdamState::new(3, lr), &[2.5, -0.3, 1e-3]);
        for (d, sign) in delta.iter().zip([1.0, -1.0, 1.0]) {
            // m_hat / sqrt(v_hat) = sign(g), up to eps
            assert!((d - sign * lr).abs() <= lr * 1e-5, "{d}");
        }
    }

    #[test]
    fn adam_constant_gradient_travels_lr_per_step() {
        let lr = 1e-3;
        let mut state = AdamState::new(1, lr);
        let total: f64 = (0..1000).map(|_| state.step(&[0.7])[0]).sum();
        assert!((total - 1000.0 * lr).abs() <= 0.01 * 1000.0 * lr);
    }
}
