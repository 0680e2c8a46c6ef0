use serde::{Deserialize, Serialize};

use super::{NumError, Tensor2};

/// A trainable tensor: value, gradient slot, and Adam state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Parameter {
    pub value: Tensor2,
    pub grad: Tensor2,
    moment1: Tensor2,
    moment2: Tensor2,
    step: u64,
}

impl Parameter {
    pub fn new(value: Tensor2) -> Self {
        let (rows, cols) = value.shape();
        Parameter {
            value,
            grad: Tensor2::zeros(rows, cols),
            moment1: Tensor2::zeros(rows, cols),
            moment2: Tensor2::zeros(rows, cols),
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 strength, applied as an added gradient term `l2 * value` before
    /// the moment update (coupled regularization, not decoupled decay).
    pub l2: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, l2: 0.0 }
    }

    pub fn l2(mut self, l2: f64) -> Self {
        self.l2 = l2;
        self
    }

    fn validate(&self) -> Result<(), NumError> {
        if self.lr <= 0.0 || self.eps <= 0.0 {
            return Err(NumError::Domain(format!("adam lr/eps must be positive: {self:?}")));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(NumError::Domain(format!("adam betas must lie in [0,1): {self:?}")));
        }
        if self.l2 < 0.0 {
            return Err(NumError::Domain(format!("adam l2 must be >= 0: {self:?}")));
        }
        Ok(())
    }
}

/// One bias-corrected Adam update. The gradient slot is consumed (zeroed).
pub fn adam_step(p: &mut Parameter, cfg: AdamConfig) -> Result<(), NumError> {
    cfg.validate()?;
    if !p.grad.all_finite() {
        return Err(NumError::NonFinite("adam: non-finite gradient, step aborted".into()));
    }
    p.step += 1;
    let t = p.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let value = p.value.data_mut();
    let grad = p.grad.data_mut();
    let m = p.moment1.data_mut();
    let v = p.moment2.data_mut();
    for i in 0..value.len() {
        let g = grad[i] + cfg.l2 * value[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let mhat = m[i] / bc1;
        let vhat = v[i] / bc2;
        value[i] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
    }
    grad.fill(0.0);
    if !p.value.all_finite() {
        return Err(NumError::NonFinite("adam: non-finite value after step".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_value_unchanged() {
        let mut p = Parameter::new(Tensor2::from_vec(1, 3, vec![1.0, -2.0, 0.5]).unwrap());
        let before = p.value.clone();
        adam_step(&mut p, AdamConfig::with_lr(0.1)).unwrap();
        assert_eq!(p.value, before);
    }

    #[test]
    fn constant_gradient_update_magnitude_approaches_lr() {
        let mut p = Parameter::new(Tensor2::zeros(1, 1));
        let cfg = AdamConfig::with_lr(1e-2);
        let mut last = p.value.get(0, 0);
        let mut delta = 0.0;
        for _ in 0..2000 {
            p.grad.set(0, 0, 0.37);
            adam_step(&mut p, cfg).unwrap();
            delta = last - p.value.get(0, 0);
            last = p.value.get(0, 0);
        }
        assert!((delta - cfg.lr).abs() < 1e-4, "saturated step {delta} vs lr {}", cfg.lr);
    }

    #[test]
    fn first_step_matches_hand_evaluated_formulas() {
        // Fresh state, g = 0.1, lr = 1e-3:
        // mhat = g, vhat = g^2, delta = -lr * g / (|g| + eps) ~= -1e-3.
        let mut p = Parameter::new(Tensor2::zeros(1, 1));
        p.grad.set(0, 0, 0.1);
        adam_step(&mut p, AdamConfig::with_lr(1e-3)).unwrap();
        let expected = -1e-3 * 0.1 / (0.1 + 1e-8);
        assert!((p.value.get(0, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn l2_term_augments_gradient() {
        let mut p = Parameter::new(Tensor2::from_vec(1, 1, vec![2.0]).unwrap());
        // Zero gradient, but l2 pulls toward the origin.
        adam_step(&mut p, AdamConfig::with_lr(1e-3).l2(0.01)).unwrap();
        assert!(p.value.get(0, 0) < 2.0);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = Parameter::new(Tensor2::zeros(1, 1));
        p.grad.set(0, 0, f64::NAN);
        let err = adam_step(&mut p, AdamConfig::with_lr(1e-3)).unwrap_err();
        assert!(matches!(err, NumError::NonFinite(_)));
        assert_eq!(p.value.get(0, 0), 0.0);
        assert_eq!(p.step_count(), 0);
    }

    #[test]
    fn gradient_cleared_after_step() {
        let mut p = Parameter::new(Tensor2::zeros(2, 2));
        p.grad.fill(1.0);
        adam_step(&mut p, AdamConfig::with_lr(1e-3)).unwrap();
        assert!(p.grad.data().iter().all(|&g| g == 0.0));
    }
}
