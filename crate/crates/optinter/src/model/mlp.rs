use super::ModelError;
use crate::num::{
    affine_backward, affine_forward, layernorm_backward, layernorm_forward, relu_backward,
    relu_forward, xavier_init, LayerNormCache, Parameter, Rng, Tensor2,
};

#[derive(Clone, Debug)]
struct HiddenLayer {
    w: Parameter,
    b: Parameter,
    /// (gamma, beta) when layer normalization is on.
    ln: Option<(Parameter, Parameter)>,
}

/// Classifier head: per hidden layer affine -> ReLU -> LayerNorm, then a
/// final affine readout to one logit. The sigmoid lives in the loss.
#[derive(Clone, Debug)]
pub struct Mlp {
    hidden: Vec<HiddenLayer>,
    out_w: Parameter,
    out_b: Parameter,
    ln_eps: f64,
}

/// Per-layer forward caches needed by the backward pass.
pub struct MlpState {
    inputs: Vec<Tensor2>,
    pre_relu: Vec<Tensor2>,
    ln_caches: Vec<Option<LayerNormCache>>,
    final_input: Tensor2,
}

impl Mlp {
    /// `hidden` may be empty: the readout is then a pure affine map.
    pub fn new(
        input_width: usize,
        hidden: &[usize],
        layer_norm: bool,
        ln_eps: f64,
        rng: &mut Rng,
    ) -> Result<Self, ModelError> {
        if input_width == 0 {
            return Err(ModelError::Config("mlp input width must be >= 1".into()));
        }
        let mut layers = Vec::with_capacity(hidden.len());
        let mut width = input_width;
        for &n_out in hidden {
            if n_out == 0 {
                return Err(ModelError::Config("mlp hidden width must be >= 1".into()));
            }
            let w = Parameter::new(xavier_init(width, n_out, rng)?);
            let b = Parameter::new(Tensor2::zeros(1, n_out));
            let ln = layer_norm.then(|| {
                (
                    Parameter::new(Tensor2::filled(1, n_out, 1.0)),
                    Parameter::new(Tensor2::zeros(1, n_out)),
                )
            });
            layers.push(HiddenLayer { w, b, ln });
            width = n_out;
        }
        let out_w = Parameter::new(xavier_init(width, 1, rng)?);
        let out_b = Parameter::new(Tensor2::zeros(1, 1));
        Ok(Mlp { hidden: layers, out_w, out_b, ln_eps })
    }

    pub fn input_width(&self) -> usize {
        self.hidden.first().map_or(self.out_w.value.rows(), |l| l.w.value.rows())
    }

    pub fn forward(&self, e: &Tensor2) -> Result<(Tensor2, MlpState), ModelError> {
        let mut inputs = Vec::with_capacity(self.hidden.len());
        let mut pre_relu = Vec::with_capacity(self.hidden.len());
        let mut ln_caches = Vec::with_capacity(self.hidden.len());
        let mut a = e.clone();
        for layer in &self.hidden {
            let z = affine_forward(&a, &layer.w.value, &layer.b.value)?;
            let r = relu_forward(&z);
            let next = match &layer.ln {
                Some((gamma, beta)) => {
                    let (y, cache) = layernorm_forward(&r, &gamma.value, &beta.value, self.ln_eps)?;
                    ln_caches.push(Some(cache));
                    y
                }
                None => {
                    ln_caches.push(None);
                    r
                }
            };
            inputs.push(a);
            pre_relu.push(z);
            a = next;
        }
        let logit = affine_forward(&a, &self.out_w.value, &self.out_b.value)?;
        Ok((logit, MlpState { inputs, pre_relu, ln_caches, final_input: a }))
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. the
    /// MLP input.
    pub fn backward(&mut self, state: &MlpState, dlogit: &Tensor2) -> Result<Tensor2, ModelError> {
        let (mut da, dw, db) = affine_backward(&state.final_input, &self.out_w.value, dlogit)?;
        accumulate(&mut self.out_w, &dw);
        accumulate(&mut self.out_b, &db);
        for (l, layer) in self.hidden.iter_mut().enumerate().rev() {
            let dr = match (&layer.ln, &state.ln_caches[l]) {
                (Some((gamma, _)), Some(cache)) => {
                    let (dr, dgamma, dbeta) = layernorm_backward(cache, &gamma.value, &da)?;
                    if let Some((gamma, beta)) = layer.ln.as_mut() {
                        accumulate(gamma, &dgamma);
                        accumulate(beta, &dbeta);
                    }
                    dr
                }
                _ => da,
            };
            let dz = relu_backward(&state.pre_relu[l], &dr)?;
            let (dx, dw, db) = affine_backward(&state.inputs[l], &layer.w.value, &dz)?;
            accumulate(&mut layer.w, &dw);
            accumulate(&mut layer.b, &db);
            da = dx;
        }
        Ok(da)
    }

    pub fn named_parameters(&self) -> Vec<(String, &Parameter)> {
        let mut out = Vec::new();
        for (l, layer) in self.hidden.iter().enumerate() {
            out.push((format!("mlp.h{l}.w"), &layer.w));
            out.push((format!("mlp.h{l}.b"), &layer.b));
            if let Some((gamma, beta)) = &layer.ln {
                out.push((format!("mlp.h{l}.gamma"), gamma));
                out.push((format!("mlp.h{l}.beta"), beta));
            }
        }
        out.push(("mlp.out.w".into(), &self.out_w));
        out.push(("mlp.out.b".into(), &self.out_b));
        out
    }

    pub fn named_parameters_mut(&mut self) -> Vec<(String, &mut Parameter)> {
        let mut out = Vec::new();
        for (l, layer) in self.hidden.iter_mut().enumerate() {
            out.push((format!("mlp.h{l}.w"), &mut layer.w));
            out.push((format!("mlp.h{l}.b"), &mut layer.b));
            if let Some((gamma, beta)) = &mut layer.ln {
                out.push((format!("mlp.h{l}.gamma"), gamma));
                out.push((format!("mlp.h{l}.beta"), beta));
            }
        }
        out.push(("mlp.out.w".into(), &mut self.out_w));
        out.push(("mlp.out.b".into(), &mut self.out_b));
        out
    }
}

fn accumulate(p: &mut Parameter, g: &Tensor2) {
    for (slot, v) in p.grad.data_mut().iter_mut().zip(g.data()) {
        *slot += v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::sigmoid_scalar;

    #[test]
    fn zeroed_parameters_give_logit_zero() {
        let mut rng = Rng::seeded(1);
        let mut mlp = Mlp::new(4, &[3, 2], true, 1e-5, &mut rng).unwrap();
        for (_, p) in mlp.named_parameters_mut() {
            p.value.fill(0.0);
        }
        // gamma = 1, beta = 0 per the symmetric-initialization setup.
        for (name, p) in mlp.named_parameters_mut() {
            if name.ends_with(".gamma") {
                p.value.fill(1.0);
            }
        }
        let x = Tensor2::from_vec(2, 4, vec![0.3, -1.0, 2.0, 0.5, 0.0, 1.0, -2.0, 0.25]).unwrap();
        let (logit, _) = mlp.forward(&x).unwrap();
        for r in 0..2 {
            assert_eq!(logit.get(r, 0), 0.0);
            assert_eq!(sigmoid_scalar(logit.get(r, 0)), 0.5);
        }
    }

    #[test]
    fn depth_zero_is_pure_affine_readout() {
        let mut rng = Rng::seeded(2);
        let mlp = Mlp::new(3, &[], false, 1e-5, &mut rng).unwrap();
        let x = Tensor2::from_vec(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let (logit, _) = mlp.forward(&x).unwrap();
        let w = &mlp.out_w.value;
        let hand = x.row(0)[0] * w.get(0, 0) + x.row(0)[1] * w.get(1, 0) + x.row(0)[2] * w.get(2, 0);
        assert!((logit.get(0, 0) - hand).abs() < 1e-15);
    }

    #[test]
    fn input_width_mismatch_errors() {
        let mut rng = Rng::seeded(3);
        let mlp = Mlp::new(4, &[2], true, 1e-5, &mut rng).unwrap();
        let x = Tensor2::zeros(1, 5);
        assert!(mlp.forward(&x).is_err());
    }
}
