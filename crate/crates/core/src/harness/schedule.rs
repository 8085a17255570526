use super::config::ScheduleMode;

/// `alpha_t = alpha0 (N0 + 1) / (N0 + t^1.1)` for episode `t >= 1`.
pub fn step_size(alpha0: f64, n0: f64, t: u64) -> f64 {
    alpha0 * (n0 + 1.0) / (n0 + (t as f64).powf(1.1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub mode: ScheduleMode,
    pub alpha0: f64,
    pub n0: f64,
}

impl Schedule {
    pub fn at(&self, t: u64) -> f64 {
        match self.mode {
            ScheduleMode::Decay => step_size(self.alpha0, self.n0, t.max(1)),
            ScheduleMode::Constant => self.alpha0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(step_size(0.3, 1000.0, 1), 0.3);
        let expected = 0.1 * 101.0 / (100.0 + 10f64.powf(1.1));
        assert_eq!(step_size(0.1, 100.0, 10), expected);
        assert!((step_size(0.1, 100.0, 10) - 0.08971).abs() < 1e-5);
        let c = Schedule {
            mode: ScheduleMode::Constant,
            alpha0: 0.2,
            n0: 5.0,
        };
        assert_eq!(c.at(1000), 0.2);
    }

    proptest! {
        #[test]
        fn non_increasing(alpha0 in 1e-3f64..10.0, n0 in 1.0f64..1e6, t in 1u64..100_000) {
            prop_assert!(step_size(alpha0, n0, t + 1) <= step_size(alpha0, n0, t));
            prop_assert!(step_size(alpha0, n0, t) <= alpha0 * (1.0 + 1e-15));
        }
    }
}
