use super::ModelError;

/// Elementwise product of two equal-length vectors (the factorization
/// function for pair embeddings).
pub fn hadamard(a: &[f64], b: &[f64]) -> Result<Vec<f64>, ModelError> {
    if a.len() != b.len() {
        return Err(ModelError::Num(crate::num::NumError::Shape(format!(
            "hadamard: {} vs {}",
            a.len(),
            b.len()
        ))));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
}

/// Selection probabilities over (memorize, factorize, naive):
/// softmax((logit + g) / tau) with optional Gumbel noise g. Numerically
/// stable for very small tau. log(alpha) is exactly the stored logit.
pub fn gumbel_softmax_weights(
    logits: [f64; 3],
    tau: f64,
    noise: Option<[f64; 3]>,
) -> Result<[f64; 3], ModelError> {
    if tau <= 0.0 || !tau.is_finite() {
        return Err(ModelError::Config(format!("temperature must be > 0, got {tau}")));
    }
    let mut h = logits;
    if let Some(g) = noise {
        for k in 0..3 {
            h[k] += g[k];
        }
    }
    let max = h[0].max(h[1]).max(h[2]);
    let mut p = [0.0; 3];
    let mut sum = 0.0;
    for k in 0..3 {
        p[k] = ((h[k] - max) / tau).exp();
        sum += p[k];
    }
    for v in &mut p {
        *v /= sum;
    }
    Ok(p)
}
