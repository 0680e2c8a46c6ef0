use crate::num::Rng;

/// Standard Gumbel(0, 1) sample from a uniform u in (0, 1):
/// g = -log(-log(u)).
pub fn gumbel_from_uniform(u: f64) -> f64 {
    -(-u.ln()).ln()
}

/// Draws one Gumbel sample; the uniform is clamped away from {0, 1}.
pub fn gumbel_noise(rng: &mut Rng) -> f64 {
    gumbel_from_uniform(rng.uniform_open())
}

/// Fresh i.i.d. noise triple per pair, one row per pair.
pub fn sample_gumbel_rows(rng: &mut Rng, num_pairs: usize) -> Vec<[f64; 3]> {
    (0..num_pairs)
        .map(|_| [gumbel_noise(rng), gumbel_noise(rng), gumbel_noise(rng)])
        .collect()
}
