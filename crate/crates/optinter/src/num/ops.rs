use super::{NumError, Tensor2};

/// Predicted probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`
/// inside the cross-entropy loss so log(0) can never occur.
pub const PROB_CLAMP: f64 = 1e-7;

/// y = x W + b, with b broadcast over rows.
/// x: B x n_in, w: n_in x n_out, b: 1 x n_out.
pub fn affine_forward(x: &Tensor2, w: &Tensor2, b: &Tensor2) -> Result<Tensor2, NumError> {
    if x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols() {
        return Err(NumError::Shape(format!(
            "affine: x {:?}, w {:?}, b {:?}",
            x.shape(),
            w.shape(),
            b.shape()
        )));
    }
    let (batch, n_in) = x.shape();
    let n_out = w.cols();
    let mut y = Tensor2::zeros(batch, n_out);
    for r in 0..batch {
        let xr = x.row(r);
        let yr = y.row_mut(r);
        yr.copy_from_slice(b.row(0));
        for (k, &xk) in xr.iter().enumerate().take(n_in) {
            if xk == 0.0 {
                continue;
            }
            let wk = w.row(k);
            for j in 0..n_out {
                yr[j] += xk * wk[j];
            }
        }
    }
    Ok(y)
}

/// Chain-rule gradients of y = x W + b w.r.t. x, w, b.
pub fn affine_backward(
    x: &Tensor2,
    w: &Tensor2,
    dy: &Tensor2,
) -> Result<(Tensor2, Tensor2, Tensor2), NumError> {
    if x.cols() != w.rows() || dy.rows() != x.rows() || dy.cols() != w.cols() {
        return Err(NumError::Shape(format!(
            "affine backward: x {:?}, w {:?}, dy {:?}",
            x.shape(),
            w.shape(),
            dy.shape()
        )));
    }
    let (batch, n_in) = x.shape();
    let n_out = w.cols();
    let mut dx = Tensor2::zeros(batch, n_in);
    let mut dw = Tensor2::zeros(n_in, n_out);
    let mut db = Tensor2::zeros(1, n_out);

    for r in 0..batch {
        let dyr = dy.row(r);
        let xr = x.row(r);
        let dxr = dx.row_mut(r);
        for k in 0..n_in {
            let wk = w.row(k);
            let mut acc = 0.0;
            for j in 0..n_out {
                acc += dyr[j] * wk[j];
            }
            dxr[k] = acc;
        }
        for k in 0..n_in {
            let xk = xr[k];
            if xk == 0.0 {
                continue;
            }
            let dwk = dw.row_mut(k);
            for j in 0..n_out {
                dwk[j] += xk * dyr[j];
            }
        }
        let dbr = db.row_mut(0);
        for j in 0..n_out {
            dbr[j] += dyr[j];
        }
    }
    Ok((dx, dw, db))
}

pub fn relu_forward(x: &Tensor2) -> Tensor2 {
    x.map(|v| v.max(0.0))
}

/// Gradient passes where the forward *input* was strictly positive.
pub fn relu_backward(x: &Tensor2, dy: &Tensor2) -> Result<Tensor2, NumError> {
    if !x.same_shape(dy) {
        return Err(NumError::Shape(format!("relu backward: x {:?}, dy {:?}", x.shape(), dy.shape())));
    }
    let mut dx = dy.clone();
    for (d, &v) in dx.data_mut().iter_mut().zip(x.data()) {
        if v <= 0.0 {
            *d = 0.0;
        }
    }
    Ok(dx)
}

/// Per-row statistics saved by the layer-norm forward pass.
#[derive(Clone, Debug)]
pub struct LayerNormCache {
    pub xhat: Tensor2,
    pub inv_std: Vec<f64>,
}

/// Row-wise standardization over the feature axis, then scale/shift:
/// y = (z - mean) / sqrt(var + eps) * gamma + beta. Variance is biased (1/n).
pub fn layernorm_forward(
    z: &Tensor2,
    gamma: &Tensor2,
    beta: &Tensor2,
    eps: f64,
) -> Result<(Tensor2, LayerNormCache), NumError> {
    if eps <= 0.0 {
        return Err(NumError::Domain(format!("layernorm eps must be > 0, got {eps}")));
    }
    let n = z.cols();
    if gamma.rows() != 1 || gamma.cols() != n || beta.rows() != 1 || beta.cols() != n {
        return Err(NumError::Shape(format!(
            "layernorm: z {:?}, gamma {:?}, beta {:?}",
            z.shape(),
            gamma.shape(),
            beta.shape()
        )));
    }
    let batch = z.rows();
    let mut y = Tensor2::zeros(batch, n);
    let mut xhat = Tensor2::zeros(batch, n);
    let mut inv_std = Vec::with_capacity(batch);
    let nf = n as f64;
    for r in 0..batch {
        let zr = z.row(r);
        let mean = zr.iter().sum::<f64>() / nf;
        let var = zr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
        let istd = 1.0 / (var + eps).sqrt();
        inv_std.push(istd);
        let xh = xhat.row_mut(r);
        let yr = y.row_mut(r);
        for j in 0..n {
            let h = (zr[j] - mean) * istd;
            xh[j] = h;
            yr[j] = h * gamma.get(0, j) + beta.get(0, j);
        }
    }
    Ok((y, LayerNormCache { xhat, inv_std }))
}

/// Gradients of layer norm w.r.t. input, gamma, beta.
pub fn layernorm_backward(
    cache: &LayerNormCache,
    gamma: &Tensor2,
    dy: &Tensor2,
) -> Result<(Tensor2, Tensor2, Tensor2), NumError> {
    let (batch, n) = cache.xhat.shape();
    if !dy.same_shape(&cache.xhat) || gamma.cols() != n {
        return Err(NumError::Shape(format!(
            "layernorm backward: xhat {:?}, dy {:?}, gamma {:?}",
            cache.xhat.shape(),
            dy.shape(),
            gamma.shape()
        )));
    }
    let mut dz = Tensor2::zeros(batch, n);
    let mut dgamma = Tensor2::zeros(1, n);
    let mut dbeta = Tensor2::zeros(1, n);
    let nf = n as f64;
    for r in 0..batch {
        let dyr = dy.row(r);
        let xh = cache.xhat.row(r);
        let istd = cache.inv_std[r];

        let dg = dgamma.row_mut(0);
        for j in 0..n {
            dg[j] += dyr[j] * xh[j];
        }
        let db = dbeta.row_mut(0);
        for j in 0..n {
            db[j] += dyr[j];
        }

        // dxhat = dy * gamma; dz = istd * (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat))
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for j in 0..n {
            let dxh = dyr[j] * gamma.get(0, j);
            mean_dxhat += dxh;
            mean_dxhat_xhat += dxh * xh[j];
        }
        mean_dxhat /= nf;
        mean_dxhat_xhat /= nf;
        let dzr = dz.row_mut(r);
        for j in 0..n {
            let dxh = dyr[j] * gamma.get(0, j);
            dzr[j] = istd * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
        }
    }
    Ok((dz, dgamma, dbeta))
}

/// Numerically stable elementwise logistic function.
pub fn sigmoid(x: &Tensor2) -> Tensor2 {
    x.map(sigmoid_scalar)
}

#[inline]
pub fn sigmoid_scalar(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_labels(labels: &[f64]) -> Result<(), NumError> {
    for &y in labels {
        if y != 0.0 && y != 1.0 {
            return Err(NumError::Domain(format!("label must be 0 or 1, got {y}")));
        }
    }
    Ok(())
}

/// Mean binary cross-entropy over the batch and its gradient w.r.t. the
/// predicted probabilities. Probabilities are clamped by [`PROB_CLAMP`].
pub fn bce_loss(yhat: &[f64], labels: &[f64]) -> Result<(f64, Vec<f64>), NumError> {
    if yhat.len() != labels.len() || yhat.is_empty() {
        return Err(NumError::Shape(format!(
            "bce: {} predictions vs {} labels",
            yhat.len(),
            labels.len()
        )));
    }
    check_labels(labels)?;
    let inv_b = 1.0 / yhat.len() as f64;
    let mut loss = 0.0;
    let mut dyhat = Vec::with_capacity(yhat.len());
    for (&p, &y) in yhat.iter().zip(labels) {
        let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
        dyhat.push(-inv_b * (y / pc - (1.0 - y) / (1.0 - pc)));
    }
    Ok((loss * inv_b, dyhat))
}

/// Sigmoid head fused with mean cross-entropy. Returns the loss, the
/// gradient w.r.t. the pre-sigmoid logits in the stable form
/// (yhat - y) / batch, and the predicted probabilities.
pub fn sigmoid_bce_with_logits(
    logits: &Tensor2,
    labels: &[f64],
) -> Result<(f64, Tensor2, Vec<f64>), NumError> {
    if logits.cols() != 1 || logits.rows() != labels.len() || labels.is_empty() {
        return Err(NumError::Shape(format!(
            "sigmoid bce: logits {:?} vs {} labels",
            logits.shape(),
            labels.len()
        )));
    }
    check_labels(labels)?;
    let batch = labels.len();
    let inv_b = 1.0 / batch as f64;
    let mut yhat = Vec::with_capacity(batch);
    let mut dlogits = Tensor2::zeros(batch, 1);
    let mut loss = 0.0;
    for r in 0..batch {
        let p = sigmoid_scalar(logits.get(r, 0));
        let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let y = labels[r];
        loss -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
        dlogits.set(r, 0, (p - y) * inv_b);
        yhat.push(p);
    }
    Ok((loss * inv_b, dlogits, yhat))
}
