use super::{NumError, Rng, Tensor2};

/// Uniform Xavier/Glorot initialization: i.i.d. samples from
/// [-sqrt(6/(n_in+n_out)), +sqrt(6/(n_in+n_out))].
pub fn xavier_init(n_in: usize, n_out: usize, rng: &mut Rng) -> Result<Tensor2, NumError> {
    if n_in == 0 || n_out == 0 {
        return Err(NumError::Domain(format!("xavier dims must be >= 1, got {n_in}x{n_out}")));
    }
    let bound = (6.0 / (n_in + n_out) as f64).sqrt();
    let mut t = Tensor2::zeros(n_in, n_out);
    for v in t.data_mut() {
        *v = rng.uniform_range(-bound, bound);
    }
    Ok(t)
}
