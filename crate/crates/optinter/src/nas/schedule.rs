use serde::{Deserialize, Serialize};

use super::SearchError;

/// Exponential per-epoch temperature decay from tau_start to tau_end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSchedule {
    pub tau_start: f64,
    pub tau_end: f64,
}

impl TemperatureSchedule {
    pub fn new(tau_start: f64, tau_end: f64) -> Result<Self, SearchError> {
        if !(tau_end > 0.0 && tau_start >= tau_end) {
            return Err(SearchError::Config(format!(
                "temperature schedule needs tau_start >= tau_end > 0, got {tau_start} >= {tau_end}"
            )));
        }
        Ok(TemperatureSchedule { tau_start, tau_end })
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        Self::new(self.tau_start, self.tau_end).map(|_| ())
    }

    /// Temperature for the given epoch: tau_start at epoch 0, tau_end at
    /// the final epoch, geometric in between.
    pub fn tau_at(&self, epoch: usize, total_epochs: usize) -> f64 {
        if total_epochs <= 1 {
            return self.tau_start;
        }
        let frac = (epoch.min(total_epochs - 1)) as f64 / (total_epochs - 1) as f64;
        self.tau_start * (self.tau_end / self.tau_start).powf(frac)
    }
}

impl Default for TemperatureSchedule {
    fn default() -> Self {
        TemperatureSchedule { tau_start: 1.0, tau_end: 0.1 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_monotone_decay() {
        let s = TemperatureSchedule::new(1.0, 0.1).unwrap();
        let total = 10;
        assert!((s.tau_at(0, total) - 1.0).abs() < 1e-12);
        assert!((s.tau_at(total - 1, total) - 0.1).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for e in 0..total {
            let tau = s.tau_at(e, total);
            assert!(tau <= last + 1e-15, "schedule must be non-increasing");
            last = tau;
        }
    }

    #[test]
    fn constant_schedule_allowed() {
        let s = TemperatureSchedule::new(0.5, 0.5).unwrap();
        assert_eq!(s.tau_at(0, 7), 0.5);
        assert_eq!(s.tau_at(6, 7), 0.5);
    }

    #[test]
    fn single_epoch_uses_tau_start() {
        let s = TemperatureSchedule::new(2.0, 0.1).unwrap();
        assert_eq!(s.tau_at(0, 1), 2.0);
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(TemperatureSchedule::new(0.1, 1.0).is_err());
        assert!(TemperatureSchedule::new(1.0, 0.0).is_err());
        assert!(TemperatureSchedule::new(-1.0, -2.0).is_err());
    }
}
