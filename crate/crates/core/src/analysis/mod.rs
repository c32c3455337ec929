//! Fidelity estimators, state ensembles, time averaging, decay fits and
//! bootstrap intervals.

mod bootstrap;
mod ensemble;
mod fit;
mod spline;

pub use bootstrap::{bootstrap, Bootstrap};
pub use ensemble::{Provenance, StateEnsemble};
pub use fit::{aic, decay_model, fit_decay, FitOptions, FitResult, FitVariant, VariantFit};
pub use spline::{CubicSpline, SplineEnds};

use serde::{Deserialize, Serialize};

use crate::engine::ShotRecord;
use crate::error::{DfsError, Result};

/// SplitMix64 step: an independent seed for sub-task `stream` of a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fraction of (accepted) shots whose data bit is 0, the ideal outcome after unpreparation.
pub fn empirical_fidelity(records: &[ShotRecord], postselect: bool) -> Result<f64> {
    if records.is_empty() {
        return Err(DfsError::InvalidParameter("no shot records".into()));
    }
    let (good, total) = records
        .iter()
        .filter(|r| !postselect || r.accepted)
        .fold((0usize, 0usize), |(g, t), r| (g + (r.data_bit == 0) as usize, t + 1));
    if total == 0 {
        return Err(DfsError::AllRejected);
    }
    Ok(good as f64 / total as f64)
}

/// Arithmetic mean over the ensemble.
pub fn state_averaged_fidelity(per_state: &[f64]) -> f64 {
    per_state.iter().sum::<f64>() / per_state.len() as f64
}

/// Fidelity decay series with confidence intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub times: Vec<f64>,
    pub fidelity_mean: Vec<f64>,
    pub fidelity_ci: Vec<(f64, f64)>,
    pub accepted_fraction: Vec<f64>,
}

impl DecayRecord {
    /// Record without interval information.
    pub fn from_means(times: Vec<f64>, fidelity_mean: Vec<f64>) -> Result<Self> {
        let ci = fidelity_mean.iter().map(|&f| (f, f)).collect();
        let acc = vec![1.0; times.len()];
        let r = DecayRecord { times, fidelity_mean, fidelity_ci: ci, accepted_fraction: acc };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.fidelity_mean.len() != n || self.fidelity_ci.len() != n || self.accepted_fraction.len() != n {
            return Err(DfsError::InvalidParameter("decay record columns differ in length".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DfsError::InvalidParameter("decay record times must be strictly increasing".into()));
        }
        for (m, (lo, hi)) in self.fidelity_mean.iter().zip(&self.fidelity_ci) {
            if lo - 1e-12 > *m || *m > hi + 1e-12 {
                return Err(DfsError::InvalidParameter(format!("interval [{lo}, {hi}] does not bracket {m}")));
            }
        }
        Ok(())
    }
}

/// `1/(t_end − t_start) ∫ F dt` of the natural cubic spline through the record.
pub fn time_averaged_fidelity(record: &DecayRecord, t_start: f64, t_end: f64) -> Result<f64> {
    time_averaged_with(record, t_start, t_end, SplineEnds::Natural)
}

/// As [`time_averaged_fidelity`] with a chosen end condition.
pub fn time_averaged_with(record: &DecayRecord, t_start: f64, t_end: f64, ends: SplineEnds) -> Result<f64> {
    if record.times.len() < 4 {
        return Err(DfsError::TooFewPoints { need: 4, have: record.times.len() });
    }
    let (lo, hi) = (record.times[0], *record.times.last().unwrap());
    let tol = 1e-12 * (hi - lo).abs().max(hi.abs());
    if !(t_start < t_end && t_start >= lo - tol && t_end <= hi + tol) {
        return Err(DfsError::InvalidParameter(format!("window [{t_start}, {t_end}] outside [{lo}, {hi}]")));
    }
    let s = CubicSpline::new(&record.times, &record.fidelity_mean, ends)?;
    Ok(s.integrate(t_start, t_end) / (t_end - t_start))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(bit: u8, accepted: bool) -> ShotRecord {
        ShotRecord { plan_id: 0, m: 1, t_total: 0.0, data_bit: bit, flags: vec![], accepted }
    }

    #[test]
    fn empirical_ratio() {
        let mut r: Vec<ShotRecord> = (0..7920).map(|_| rec(0, true)).collect();
        r.extend((0..80).map(|_| rec(1, true)));
        assert!((empirical_fidelity(&r, true).unwrap() - 0.99).abs() < 1e-15);
        let all: Vec<ShotRecord> = (0..10).map(|_| rec(0, true)).collect();
        assert_eq!(empirical_fidelity(&all, false).unwrap(), 1.0);
        let rejected: Vec<ShotRecord> = (0..10).map(|_| rec(0, false)).collect();
        assert_eq!(empirical_fidelity(&rejected, true), Err(DfsError::AllRejected));
    }

    #[test]
    fn time_average_examples() {
        let t: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let c = DecayRecord::from_means(t.clone(), vec![0.7; 6]).unwrap();
        assert!((time_averaged_fidelity(&c, 0.0, 5.0).unwrap() - 0.7).abs() < 1e-14);
        let ramp = DecayRecord::from_means(t.clone(), t.iter().map(|x| 1.0 - 0.1 * x).collect()).unwrap();
        assert!((time_averaged_fidelity(&ramp, 0.0, 5.0).unwrap() - 0.75).abs() < 1e-14);
        assert!(time_averaged_fidelity(&ramp, 0.0, 6.0).is_err());
        let short = DecayRecord::from_means(vec![0.0, 1.0, 2.0], vec![1.0; 3]).unwrap();
        assert!(matches!(time_averaged_fidelity(&short, 0.0, 1.0), Err(DfsError::TooFewPoints { .. })));
    }

    #[test]
    fn exponential_average_matches_closed_form() {
        let tau = 100e-6;
        let t: Vec<f64> = (0..8).map(|i| tau * i as f64 / 7.0).collect();
        let f: Vec<f64> = t.iter().map(|x| (-x / tau).exp()).collect();
        let r = DecayRecord::from_means(t, f).unwrap();
        let exact = 1.0 - (-1.0f64).exp();
        let got = time_averaged_fidelity(&r, 0.0, tau).unwrap();
        assert!(((got - exact) / exact).abs() < 1e-3);
    }

    #[test]
    fn seeds_differ_by_stream() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(5, 3), derive_seed(5, 3));
    }
}
