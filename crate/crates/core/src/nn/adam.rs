use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for a fixed list of parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    /// State for parameters of the given lengths.
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        Self {
            config,
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update. Tensors with `trainable[i] == false`
    /// keep both their values and their moments.
    pub fn step(
        &mut self,
        params: &mut [&mut [f64]],
        grads: &[&[f64]],
        trainable: &[bool],
    ) -> Result<()> {
        let n = self.first.len();
        if params.len() != n || grads.len() != n || trainable.len() != n {
            return Err(Error::Shape(format!(
                "optimizer tracks {n} tensors, got {} params / {} grads / {} flags",
                params.len(),
                grads.len(),
                trainable.len()
            )));
        }
        for i in 0..n {
            if params[i].len() != self.first[i].len() || grads[i].len() != self.first[i].len() {
                return Err(Error::Shape(format!(
                    "tensor {i}: optimizer size {}, param {}, grad {}",
                    self.first[i].len(),
                    params[i].len(),
                    grads[i].len()
                )));
            }
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for i in (0..n).filter(|&i| trainable[i]) {
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for (((p, &g), m), v) in params[i].iter_mut().zip(grads[i]).zip(m).zip(v) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
