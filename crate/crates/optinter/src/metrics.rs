//! Evaluation metrics: AUC via rank statistics, log loss, and a paired
//! two-tailed t-test for multi-seed run comparison. The t CDF is computed
//! from the regularized incomplete beta function (continued fraction), so
//! no statistics dependency is needed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::PROB_CLAMP;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("undefined metric: {0}")]
    Undefined(String),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub logloss: f64,
    pub n_instances: usize,
    pub param_count: usize,
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "auc={:.6} logloss={:.6} n={} params={}",
            self.auc, self.logloss, self.n_instances, self.param_count
        )
    }
}

/// Probability that a random positive outranks a random negative, ties
/// counted half. Rank-sum computation, O(n log n).
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(MetricError::Domain(format!(
            "auc: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    let n_neg = labels.iter().filter(|&&y| y == 0.0).count();
    if n_pos + n_neg != labels.len() {
        return Err(MetricError::Domain("auc: labels must be 0 or 1".into()));
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::Undefined("auc needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Average ranks over tie groups, then sum positive ranks.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0; // ranks are 1-based
        for &idx in &order[i..=j] {
            if labels[idx] == 1.0 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Mean negative Bernoulli log-likelihood; scores clamped away from {0,1}.
pub fn logloss(scores: &[f64], labels: &[f64]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(MetricError::Domain(format!(
            "logloss: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    for (&p, &y) in scores.iter().zip(labels) {
        if y != 0.0 && y != 1.0 {
            return Err(MetricError::Domain("logloss: labels must be 0 or 1".into()));
        }
        let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        total -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
    }
    Ok(total / scores.len() as f64)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t_statistic: f64,
    pub p_value: f64,
    pub mean_difference: f64,
    pub n: usize,
}

/// Two-tailed paired t-test over per-seed metric pairs. Zero variance of
/// the differences is reported as p = 0 when the means differ and p = 1
/// when they are identical.
pub fn compare_runs(metrics_a: &[f64], metrics_b: &[f64]) -> Result<PairedTTest, MetricError> {
    if metrics_a.len() != metrics_b.len() || metrics_a.is_empty() {
        return Err(MetricError::Domain(format!(
            "compare_runs: {} vs {} samples",
            metrics_a.len(),
            metrics_b.len()
        )));
    }
    let n = metrics_a.len();
    let diffs: Vec<f64> = metrics_a.iter().zip(metrics_b).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let constant = diffs.iter().all(|&d| d == diffs[0]);
    if constant || n == 1 {
        let p = if diffs[0] == 0.0 { 1.0 } else { 0.0 };
        let t = if diffs[0] == 0.0 { 0.0 } else { f64::INFINITY * diffs[0].signum() };
        return Ok(PairedTTest { t_statistic: t, p_value: p, mean_difference: mean, n });
    }
    let var = diffs.iter().map(|&d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    if var == 0.0 {
        let p = if mean == 0.0 { 1.0 } else { 0.0 };
        return Ok(PairedTTest { t_statistic: 0.0, p_value: p, mean_difference: mean, n });
    }
    let t = mean / (var / n as f64).sqrt();
    let dof = (n - 1) as f64;
    let p = student_t_two_tailed_p(t, dof);
    Ok(PairedTTest { t_statistic: t, p_value: p, mean_difference: mean, n })
}

/// Two-tailed p-value for Student's t: I_{nu/(nu+t^2)}(nu/2, 1/2).
pub fn student_t_two_tailed_p(t: f64, dof: f64) -> f64 {
    incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t))
}

// Lanczos approximation (g = 7, 9 terms).
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let t = x + 7.5;
        let mut a = COEF[0];
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

// Continued fraction for the incomplete beta function (Lentz's method).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Rng;

    #[test]
    fn perfect_ranking_is_one() {
        assert_eq!(auc(&[0.9, 0.1], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.9], &[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn all_ties_give_half() {
        assert_eq!(auc(&[0.4, 0.4, 0.4, 0.4], &[1.0, 0.0, 1.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(auc(&[0.2, 0.4], &[1.0, 1.0]), Err(MetricError::Undefined(_))));
    }

    /// Exhaustive O(n^2) pair-counting oracle.
    fn auc_oracle(scores: &[f64], labels: &[f64]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, (&si, &yi)) in scores.iter().zip(labels).enumerate() {
            for (&sj, &yj) in scores.iter().zip(labels).skip(i + 1) {
                let (pos, neg) = match (yi, yj) {
                    (1.0, 0.0) => (si, sj),
                    (0.0, 1.0) => (sj, si),
                    _ => continue,
                };
                pairs += 1.0;
                if pos > neg {
                    wins += 1.0;
                } else if pos == neg {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn rank_sum_matches_pair_counting_oracle_exactly() {
        let mut rng = Rng::seeded(404);
        for _ in 0..200 {
            let n = 8;
            // Coarse grid scores force plenty of ties.
            let scores: Vec<f64> = (0..n).map(|_| (rng.below(5) as f64) / 4.0).collect();
            let mut labels: Vec<f64> = (0..n).map(|_| f64::from(rng.bernoulli(0.5))).collect();
            labels[0] = 1.0;
            labels[1] = 0.0;
            let fast = auc(&scores, &labels).unwrap();
            let slow = auc_oracle(&scores, &labels);
            assert_eq!(fast, slow, "scores {scores:?} labels {labels:?}");
        }
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let mut rng = Rng::seeded(77);
        let scores: Vec<f64> = (0..20).map(|_| rng.uniform()).collect();
        let labels: Vec<f64> = (0..20).map(|i| f64::from(i % 3 == 0)).collect();
        let base = auc(&scores, &labels).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|&s| (5.0 * s - 2.0).tanh()).collect();
        assert!((auc(&squashed, &labels).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn auc_complements_on_flipped_labels() {
        let mut rng = Rng::seeded(5);
        let scores: Vec<f64> = (0..30).map(|_| (rng.below(7) as f64) / 6.0).collect();
        let labels: Vec<f64> = (0..30).map(|i| f64::from(i % 2 == 0)).collect();
        let a = auc(&scores, &labels).unwrap();
        let flipped: Vec<f64> = labels.iter().map(|&y| 1.0 - y).collect();
        let b = auc(&scores, &flipped).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_score_is_ln_two() {
        let ln2 = std::f64::consts::LN_2;
        assert!((logloss(&[0.5], &[1.0]).unwrap() - ln2).abs() < 1e-15);
        assert!((logloss(&[0.5, 0.5], &[1.0, 0.0]).unwrap() - ln2).abs() < 1e-15);
    }

    #[test]
    fn five_instance_case_matches_direct_arithmetic() {
        let scores = [0.9, 0.2, 0.7, 0.4, 0.6];
        let labels = [1.0, 0.0, 1.0, 0.0, 1.0];
        let hand = -(0.9f64.ln() + 0.8f64.ln() + 0.7f64.ln() + 0.6f64.ln() + 0.6f64.ln()) / 5.0;
        assert!((logloss(&scores, &labels).unwrap() - hand).abs() < 1e-12);
    }

    #[test]
    fn logloss_improves_when_score_moves_toward_label() {
        let labels = [1.0, 0.0, 1.0];
        let before = logloss(&[0.6, 0.3, 0.5], &labels).unwrap();
        let after = logloss(&[0.7, 0.3, 0.5], &labels).unwrap();
        assert!(after < before);
    }

    #[test]
    fn identical_sequences_give_p_one() {
        let xs = [0.8, 0.81, 0.79, 0.8];
        let t = compare_runs(&xs, &xs).unwrap();
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn constant_nonzero_differences_give_p_zero() {
        let a = [0.81, 0.82, 0.83, 0.84];
        let b: Vec<f64> = a.iter().map(|x| x - 0.01).collect();
        // Differences computed as a[i] - b[i] are bitwise identical here.
        let t = compare_runs(&a, &b).unwrap();
        assert_eq!(t.p_value, 0.0);
    }

    #[test]
    fn ten_pair_sample_matches_reference_within_1e6() {
        // Reference values computed with an independent high-precision
        // implementation (40-digit arithmetic) of the paired t-test.
        let a = [0.8101, 0.8094, 0.8099, 0.8087, 0.8105, 0.8092, 0.8096, 0.8103, 0.8090, 0.8098];
        let b = [0.8094, 0.8090, 0.8101, 0.8080, 0.8098, 0.8088, 0.8090, 0.8104, 0.8091, 0.8095];
        let t = compare_runs(&a, &b).unwrap();
        assert!((t.t_statistic - 3.0156932195441320).abs() < 1e-9, "t = {}", t.t_statistic);
        assert!((t.p_value - 0.014580703272074659).abs() < 1e-6, "p = {}", t.p_value);
    }

    #[test]
    fn incomplete_beta_endpoints() {
        assert_eq!(incomplete_beta(2.0, 3.0, 0.0), 0.0);
        assert_eq!(incomplete_beta(2.0, 3.0, 1.0), 1.0);
        // I_x(1,1) = x.
        assert!((incomplete_beta(1.0, 1.0, 0.37) - 0.37).abs() < 1e-12);
    }
}
