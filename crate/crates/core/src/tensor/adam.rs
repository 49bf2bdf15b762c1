//! Adam with bias correction.

use super::{Tensor, TensorError};

/// Optimizer state: first/second moment estimates per parameter, aligned by
/// index with the caller's parameter ordering.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    /// Defaults: beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    pub fn new(lr: f64, params: &[&Tensor]) -> Self {
        AdamState {
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
        }
    }

    /// One update over all parameters. `grads` must align with the
    /// parameter order the state was created with.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor],
        grads: &[(String, Tensor)],
    ) -> Result<(), TensorError> {
        assert_eq!(params.len(), grads.len());
        for (name, g) in grads {
            if !g.is_finite() {
                return Err(TensorError::NonFiniteGradient {
                    parameter: name.clone(),
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (i, p) in params.iter_mut().enumerate() {
            let g = grads[i].1.data();
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let out = p.data_mut();
            for j in 0..g.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                out[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = Tensor::from_vec(&[2], vec![0.5, -0.25]);
        let mut state = AdamState::new(0.001, &[&p]);
        let grads = vec![("p".to_string(), Tensor::zeros(&[2]))];
        state.step(&mut [&mut p], &grads).unwrap();
        assert_eq!(p.data(), &[0.5, -0.25]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        // Bias correction makes the very first update lr * g / (|g| + eps).
        let mut p = Tensor::scalar(1.0);
        let mut state = AdamState::new(0.001, &[&p]);
        let grads = vec![("p".to_string(), Tensor::scalar(1.0))];
        state.step(&mut [&mut p], &grads).unwrap();
        let moved = 1.0 - p.item();
        assert!((moved - 0.001).abs() < 1e-9, "moved {}", moved);
    }

    #[test]
    fn constant_gradient_moves_against_its_sign() {
        let mut p = Tensor::scalar(0.0);
        let mut state = AdamState::new(0.01, &[&p]);
        for _ in 0..50 {
            let grads = vec![("p".to_string(), Tensor::scalar(2.5))];
            state.step(&mut [&mut p], &grads).unwrap();
        }
        assert!(p.item() < 0.0);
    }

    #[test]
    fn rejects_non_finite_gradients() {
        let mut p = Tensor::scalar(0.0);
        let mut state = AdamState::new(0.01, &[&p]);
        let grads = vec![("p".to_string(), Tensor::scalar(f64::NAN))];
        assert!(matches!(
            state.step(&mut [&mut p], &grads),
            Err(TensorError::NonFiniteGradient { .. })
        ));
    }
}
