use serde::{Deserialize, Serialize};

/// Midpoint threshold between the statistics of the two calibration entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub tau_0: f64,
    pub damaged_tau: f64,
    pub undamaged_tau: f64,
    pub damaged_id: u64,
    pub undamaged_id: u64,
    pub method: String,
    /// Set when the damaged entry does not score above the undamaged one.
    pub inverted: bool,
}

pub fn calibrate_threshold(damaged_tau: f64, undamaged_tau: f64, damaged_id: u64, undamaged_id: u64) -> Threshold {
    Threshold {
        tau_0: 0.5 * (damaged_tau + undamaged_tau),
        damaged_tau,
        undamaged_tau,
        damaged_id,
        undamaged_id,
        method: "midpoint".into(),
        inverted: damaged_tau <= undamaged_tau,
    }
}

/// Damage iff `tau >= tau_0`.
pub fn classify(tau: f64, threshold: &Threshold) -> bool {
    tau >= threshold.tau_0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_and_boundary() {
        let t = calibrate_threshold(-1.0, -2.0, 1, 2);
        assert_eq!(t.tau_0, -1.5);
        assert!(!t.inverted);
        assert!(classify(-1.5, &t));
        assert!(!classify(-1.5 - 1e-12, &t));
        assert!(classify(1e300, &t));
        let flat = calibrate_threshold(-3.0, -3.0, 1, 2);
        assert_eq!(flat.tau_0, -3.0);
        assert!(flat.inverted);
    }
}
