use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use super::{HarnessError, ResultRecord};
use crate::frames::{rotation_to_quaternion, WorldPoint};

/// Percentiles reported in every summary.
pub const PERCENTILES: [f64; 6] = [50.0, 78.0, 86.0, 90.0, 95.0, 97.0];

/// Location error (m).
pub fn e_loc(truth: &WorldPoint, est: &WorldPoint) -> f64 {
    (truth - est).norm()
}

/// Relative quaternion distance `|q_true - q_est| / |q_est|`, both
/// quaternions taken with a non-negative scalar part.
pub fn e_pos(truth: &Rotation3<f64>, est: &Rotation3<f64>) -> f64 {
    let a = rotation_to_quaternion(truth).canonical().as_array();
    let b = rotation_to_quaternion(est).canonical().as_array();
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.iter().map(|y| y * y).sum();
    (diff / norm).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub successes: usize,
    /// Records without an estimate; excluded from everything else.
    pub failures: usize,
    pub mean_e_loc: f64,
    pub std_err_e_loc: f64,
    pub median_e_loc: f64,
    pub max_e_loc: f64,
    /// `(percentile, E_loc)` pairs for [`PERCENTILES`].
    pub percentiles: Vec<(f64, f64)>,
    pub mean_e_pos: f64,
    pub std_err_e_pos: f64,
}

impl SummaryStats {
    pub fn percentile(&self, p: f64) -> Option<f64> {
        self.percentiles.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Linear interpolation between order statistics of sorted `values`.
pub fn percentile_sorted(values: &[f64], p: f64) -> f64 {
    let rank = (p / 100.0).clamp(0.0, 1.0) * (values.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    values[lo] + (values[hi] - values[lo]) * (rank - lo as f64)
}

fn successes(records: &[ResultRecord]) -> Vec<(f64, f64)> {
    records.iter().filter_map(|r| Some((r.e_loc?, r.e_pos?))).collect()
}

pub fn summarize(records: &[ResultRecord]) -> Result<SummaryStats, HarnessError> {
    let ok = successes(records);
    if ok.is_empty() {
        return Err(HarnessError::NoSuccessfulRecords {
            failures: records.len(),
        });
    }
    let mut loc: Vec<f64> = ok.iter().map(|r| r.0).collect();
    let pos: Vec<f64> = ok.iter().map(|r| r.1).collect();
    loc.sort_by(f64::total_cmp);
    let (mean_e_loc, std_err_e_loc) = mean_and_std_err(&loc);
    let (mean_e_pos, std_err_e_pos) = mean_and_std_err(&pos);
    Ok(SummaryStats {
        successes: ok.len(),
        failures: records.len() - ok.len(),
        mean_e_loc,
        std_err_e_loc,
        median_e_loc: percentile_sorted(&loc, 50.0),
        max_e_loc: loc[loc.len() - 1],
        percentiles: PERCENTILES.iter().map(|&p| (p, percentile_sorted(&loc, p))).collect(),
        mean_e_pos,
        std_err_e_pos,
    })
}

/// `0, step, 2 step, ..., max` (m).
pub fn cdf_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step).round() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

/// Share of successful records with `E_loc <= x` for each grid point.
pub fn cdf(records: &[ResultRecord], grid: &[f64]) -> Result<Vec<(f64, f64)>, HarnessError> {
    let mut loc: Vec<f64> = successes(records).into_iter().map(|r| r.0).collect();
    if loc.is_empty() {
        return Err(HarnessError::NoSuccessfulRecords {
            failures: records.len(),
        });
    }
    loc.sort_by(f64::total_cmp);
    let n = loc.len() as f64;
    Ok(grid
        .iter()
        .map(|&x| (x, loc.partition_point(|&v| v <= x) as f64 / n))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{euler_to_rotation, rotation_to_euler, Pose};
    use crate::solver::Algorithm;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn rec(e: Option<f64>) -> ResultRecord {
        ResultRecord {
            sample: 0,
            algorithm: Algorithm::Vpa,
            solved_by: e.map(|_| Algorithm::Vpca),
            visible: 2,
            truth: Pose::identity(),
            estimate: e.map(|_| Pose::identity()),
            e_loc: e,
            e_pos: e.map(|_| 0.0),
            failure: if e.is_some() { None } else { Some("Precondition".into()) },
        }
    }

    #[test]
    fn e_loc_cases() {
        let a = WorldPoint::new(0.0, 0.0, 0.0);
        let b = WorldPoint::new(0.06, 0.08, 0.0);
        assert_eq!(e_loc(&a, &a), 0.0);
        assert_relative_eq!(e_loc(&a, &b), 0.10, epsilon = 1e-15);
        assert_eq!(e_loc(&a, &b), e_loc(&b, &a));
    }

    #[test]
    fn e_pos_cases() {
        let id = Rotation3::identity();
        assert_eq!(e_pos(&id, &id), 0.0);
        let rz = Rotation3::from_axis_angle(&nalgebra::Vector3::z_axis(), FRAC_PI_2);
        assert_relative_eq!(e_pos(&id, &rz), 0.7654, epsilon = 1e-4);
        let exact = ((1.0 - 0.5f64.sqrt()).powi(2) + 0.5).sqrt();
        assert_relative_eq!(e_pos(&id, &rz), exact, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn e_pos_survives_euler_round_trip(phi in -3.0f64..3.0, theta in -1.5f64..1.5, psi in -3.0f64..3.0,
                                          phi2 in -3.0f64..3.0, theta2 in -1.5f64..1.5, psi2 in -3.0f64..3.0) {
            let a = euler_to_rotation(crate::frames::EulerAngles::new(phi, theta, psi));
            let b = euler_to_rotation(crate::frames::EulerAngles::new(phi2, theta2, psi2));
            let a2 = euler_to_rotation(rotation_to_euler(&a).unwrap());
            prop_assert!((e_pos(&a, &b) - e_pos(&a2, &b)).abs() < 1e-9);
            prop_assert!(e_pos(&a, &b) >= 0.0);
        }

        #[test]
        fn cdf_and_percentiles_are_monotone(values in prop::collection::vec(0.0f64..1.0, 1..200)) {
            let records: Vec<_> = values.iter().map(|v| rec(Some(*v))).collect();
            let s = summarize(&records).unwrap();
            for w in s.percentiles.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
            }
            let c = cdf(&records, &cdf_grid(1.0, 0.01)).unwrap();
            prop_assert!(c[0].1 >= 0.0);
            for w in c.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
            }
            prop_assert!((c.last().unwrap().1 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn four_values() {
        let records: Vec<_> = [0.01, 0.02, 0.03, 0.04].iter().map(|v| rec(Some(*v))).collect();
        let s = summarize(&records).unwrap();
        assert_relative_eq!(s.median_e_loc, 0.025, epsilon = 1e-15);
        let c = cdf(&records, &[0.025]).unwrap();
        assert_eq!(c[0].1, 0.5);
    }

    #[test]
    fn equal_values_and_failures() {
        let mut records: Vec<_> = (0..7).map(|_| rec(Some(0.07))).collect();
        records.push(rec(None));
        let s = summarize(&records).unwrap();
        assert_eq!(s.failures, 1);
        assert_eq!(s.successes, 7);
        for (_, v) in &s.percentiles {
            assert_eq!(*v, 0.07);
        }
        assert_eq!(s.std_err_e_loc, 0.0);
        assert_eq!(cdf(&records, &[0.07]).unwrap()[0].1, 1.0);
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(summarize(&[]), Err(HarnessError::NoSuccessfulRecords { failures: 0 }));
        assert_eq!(
            cdf(&[rec(None)], &[0.1]),
            Err(HarnessError::NoSuccessfulRecords { failures: 1 })
        );
    }
}
