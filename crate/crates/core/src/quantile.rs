//! Cross-sectional quantile aggregation: step 2 of the two-step estimator.
//!
//! The tau-quantile of the per-unit estimates minimizes the mean check loss
//! rho_tau(u) = u (tau - 1{u <= 0}). We compute it by selection: the
//! ceil(N tau)-th order statistic, i.e. the lower quantile
//! inf{x : F_N(x) >= tau}, which always equals a data point and coincides
//! with the check-loss argmin (its infimum when the argmin is an interval).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::UnitEstimates;

/// A (tau, coefficient) pair identifying one estimand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileTarget {
    pub tau: f64,
    pub coef_index: usize,
}

impl QuantileTarget {
    pub fn new(tau: f64, coef_index: usize) -> Result<Self> {
        validate_tau(tau)?;
        Ok(QuantileTarget { tau, coef_index })
    }
}

/// A point estimate of the tau-quantile of one coefficient's cross-sectional
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub value: f64,
    pub target: QuantileTarget,
    pub n_units: usize,
}

pub(crate) fn validate_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must lie in (0, 1), got {tau}"
        )));
    }
    Ok(())
}

/// The check function rho_tau(u) = u (tau - 1{u <= 0}).
#[inline]
pub fn check_loss(u: f64, tau: f64) -> f64 {
    if u <= 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// One-based order-statistic rank of the lower tau-quantile: ceil(n tau),
/// with a snap window for products that should be exact integers but land a
/// few ulps off (e.g. 20 * 0.35).
pub(crate) fn order_rank(n: usize, tau: f64) -> usize {
    let nt = n as f64 * tau;
    let nearest = nt.round();
    let k = if (nt - nearest).abs() < 1e-9 {
        nearest
    } else {
        nt.ceil()
    };
    (k as usize).clamp(1, n)
}

/// Lower sample tau-quantile: the ceil(n tau)-th smallest value.
///
/// Runs in O(n) via selection, not by iterating the check-loss objective;
/// the two agree by the order-statistic equivalence.
pub fn sample_quantile(values: &[f64], tau: f64) -> Result<f64> {
    validate_tau(tau)?;
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "non-finite value in quantile input".into(),
        ));
    }
    let k = order_rank(values.len(), tau);
    let mut buf = values.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Tau-quantile of one coefficient column of the first-step estimates.
pub fn aggregate(est: &UnitEstimates, target: QuantileTarget) -> Result<QuantileEstimate> {
    let column = est.coefficient_column(target.coef_index)?;
    let value = sample_quantile(column, target.tau)?;
    Ok(QuantileEstimate {
        value,
        target,
        n_units: est.n_units(),
    })
}

pub(crate) fn validate_tau_grid(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (j, &tau) in taus.iter().enumerate() {
        validate_tau(tau)?;
        if j > 0 && tau <= taus[j - 1] {
            return Err(Error::UnsortedTaus { position: j });
        }
    }
    Ok(())
}

/// Quantile estimates over a strictly ascending tau grid. The column is
/// sorted once and indexed per tau, which matches `aggregate` value for
/// value and is monotone in tau by construction.
pub fn quantile_curve(
    est: &UnitEstimates,
    coef_index: usize,
    taus: &[f64],
) -> Result<Vec<QuantileEstimate>> {
    validate_tau_grid(taus)?;
    let column = est.coefficient_column(coef_index)?;
    if column.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "non-finite value in quantile input".into(),
        ));
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(taus
        .iter()
        .map(|&tau| QuantileEstimate {
            value: sorted[order_rank(n, tau) - 1],
            target: QuantileTarget { tau, coef_index },
            n_units: n,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn check_loss_examples() {
        assert_eq!(check_loss(0.0, 0.3), 0.0);
        assert!((check_loss(-1.0, 0.3) - 0.7).abs() < 1e-15);
        assert!((check_loss(2.0, 0.3) - 0.6).abs() < 1e-15);
        assert!(check_loss(-0.5, 0.8) > 0.0);
    }

    #[test]
    fn sample_quantile_examples() {
        assert_eq!(sample_quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5).unwrap(), 3.0);
        assert_eq!(sample_quantile(&[7.0], 0.123).unwrap(), 7.0);
        assert_eq!(sample_quantile(&[7.0], 0.987).unwrap(), 7.0);
        // 10 values, tau = 0.3 -> 3rd smallest
        let v: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(sample_quantile(&v, 0.3).unwrap(), 2.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            sample_quantile(&[], 0.5),
            Err(Error::EmptyInput)
        ));
        assert!(sample_quantile(&[1.0], 0.0).is_err());
        assert!(sample_quantile(&[1.0], 1.0).is_err());
        assert!(sample_quantile(&[1.0, f64::NAN], 0.5).is_err());
        assert!(QuantileTarget::new(1.2, 0).is_err());
    }

    #[test]
    fn near_integer_rank_products_snap() {
        // 20 * 0.35 lands one ulp above 7 in f64; naive ceil would give 8.
        assert_eq!(order_rank(20, 0.35), 7);
        assert_eq!(order_rank(10, 0.3), 3);
        assert_eq!(order_rank(160, 0.7), 112);
        assert_eq!(order_rank(5, 0.5), 3);
        assert_eq!(order_rank(1, 0.9999), 1);
    }

    /// Brute-force check-loss minimizer over all data points and midpoints of
    /// consecutive sorted values; ties resolved to the smallest candidate.
    fn brute_force_minimizer(values: &[f64], tau: f64) -> f64 {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut candidates = sorted.clone();
        for w in sorted.windows(2) {
            candidates.push(0.5 * (w[0] + w[1]));
        }
        let mean_loss = |c: f64| -> f64 {
            values.iter().map(|&v| check_loss(v - c, tau)).sum::<f64>() / values.len() as f64
        };
        let min = candidates
            .iter()
            .map(|&c| mean_loss(c))
            .fold(f64::INFINITY, f64::min);
        let scale = 1.0 + sorted.last().unwrap().abs().max(sorted[0].abs());
        candidates
            .iter()
            .copied()
            .filter(|&c| mean_loss(c) <= min + 1e-12 * scale)
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn matches_brute_force_scan_on_uniform_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let values: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let q = sample_quantile(&values, 0.3).unwrap();
        let oracle = brute_force_minimizer(&values, 0.3);
        assert_eq!(q, oracle);
    }

    fn estimates_from_column(column: &[f64]) -> UnitEstimates {
        let m = DMatrix::from_fn(column.len(), 1, |i, _| column[i]);
        UnitEstimates::new(m, 1).unwrap()
    }

    #[test]
    fn aggregate_examples() {
        let column: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let est = estimates_from_column(&column);
        let q = aggregate(&est, QuantileTarget::new(0.3, 0).unwrap()).unwrap();
        assert_eq!(q.value, 2.0);
        assert_eq!(q.n_units, 10);

        let flat = estimates_from_column(&[4.5; 8]);
        for tau in [0.1, 0.5, 0.9] {
            let q = aggregate(&flat, QuantileTarget::new(tau, 0).unwrap()).unwrap();
            assert_eq!(q.value, 4.5);
        }

        assert!(matches!(
            aggregate(&est, QuantileTarget { tau: 0.5, coef_index: 3 }),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn aggregate_on_normal_grid() {
        // theta_i = Phi^{-1}(i / (N + 1)), N = 160; tau = 0.7 picks the
        // 112th grid point exactly.
        let n = 160;
        let grid: Vec<f64> = (1..=n)
            .map(|i| crate::sim::dist::normal_quantile(i as f64 / (n + 1) as f64))
            .collect();
        let est = estimates_from_column(&grid);
        let q = aggregate(&est, QuantileTarget::new(0.7, 0).unwrap()).unwrap();
        assert_eq!(q.value, crate::sim::dist::normal_quantile(112.0 / 161.0));
    }

    #[test]
    fn curve_examples() {
        let column: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let est = estimates_from_column(&column);
        let curve = quantile_curve(&est, 0, &[0.25, 0.5, 0.75]).unwrap();
        let values: Vec<f64> = curve.iter().map(|q| q.value).collect();
        assert_eq!(values, vec![25.0, 50.0, 75.0]);

        let single = quantile_curve(&est, 0, &[0.4]).unwrap();
        let direct = aggregate(&est, QuantileTarget::new(0.4, 0).unwrap()).unwrap();
        assert_eq!(single[0].value, direct.value);

        assert!(matches!(
            quantile_curve(&est, 0, &[0.5, 0.4]),
            Err(Error::UnsortedTaus { position: 1 })
        ));
        assert!(matches!(
            quantile_curve(&est, 0, &[0.5, 0.5]),
            Err(Error::UnsortedTaus { position: 1 })
        ));
    }

    #[test]
    fn curve_matches_sorted_index_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let column: Vec<f64> = (0..1000).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect();
        let est = estimates_from_column(&column);
        let taus: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        let curve = quantile_curve(&est, 0, &taus).unwrap();

        let mut sorted = column.clone();
        sorted.sort_by(f64::total_cmp);
        for (j, q) in curve.iter().enumerate() {
            let k = order_rank(1000, taus[j]);
            assert_eq!(q.value, sorted[k - 1]);
            if j > 0 {
                assert!(q.value >= curve[j - 1].value);
            }
            // selection path agrees with the sort path
            assert_eq!(q.value, sample_quantile(&column, taus[j]).unwrap());
        }
    }

    proptest! {
        #[test]
        fn order_statistic_equivalence(
            values in proptest::collection::vec(-1e3f64..1e3, 1..200),
            tau in 0.001f64..0.999,
        ) {
            let q = sample_quantile(&values, tau).unwrap();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assert_eq!(q, sorted[order_rank(values.len(), tau) - 1]);
        }

        #[test]
        fn minimizer_property(
            values in proptest::collection::vec(-1e3f64..1e3, 1..100),
            tau in 0.01f64..0.99,
        ) {
            let q = sample_quantile(&values, tau).unwrap();
            let mean_loss = |c: f64| -> f64 {
                values.iter().map(|&v| check_loss(v - c, tau)).sum::<f64>() / values.len() as f64
            };
            let scale = 1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let at_q = mean_loss(q);
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            for &c in &sorted {
                prop_assert!(at_q <= mean_loss(c) + 1e-12 * scale);
            }
            for w in sorted.windows(2) {
                prop_assert!(at_q <= mean_loss(0.5 * (w[0] + w[1])) + 1e-12 * scale);
            }
        }

        #[test]
        fn positive_affine_equivariance(
            values in proptest::collection::vec(-1e3f64..1e3, 1..100),
            tau in 0.01f64..0.99,
            a in 0.01f64..50.0,
            b in -100.0f64..100.0,
        ) {
            let transformed: Vec<f64> = values.iter().map(|&v| a * v + b).collect();
            let lhs = sample_quantile(&transformed, tau).unwrap();
            let rhs = a * sample_quantile(&values, tau).unwrap() + b;
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn permutation_invariance(
            values in proptest::collection::vec(-1e3f64..1e3, 1..100),
            tau in 0.01f64..0.99,
            seed in 0u64..1000,
        ) {
            let mut shuffled = values.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            shuffled.shuffle(&mut rng);
            prop_assert_eq!(
                sample_quantile(&values, tau).unwrap(),
                sample_quantile(&shuffled, tau).unwrap()
            );
        }

        #[test]
        fn monotone_in_tau(
            values in proptest::collection::vec(-1e3f64..1e3, 1..100),
            t1 in 0.01f64..0.99,
            t2 in 0.01f64..0.99,
        ) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(
                sample_quantile(&values, lo).unwrap() <= sample_quantile(&values, hi).unwrap()
            );
        }
    }
}
