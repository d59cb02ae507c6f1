//! Sample statistics: nearest-rank percentiles, compensated means, and the
//! per-scenario metrics report.

use crate::clustering::TargetPercentile;
use crate::error::{Error, Result};

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn compensated_mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| compensated_sum(values.iter().copied()) / values.len() as f64)
}

// p·n is computed in floating point; the slack keeps e.g. (1 - 0.9)·10 at rank 1
const RANK_SLACK: f64 = 1e-9;

/// Nearest-rank percentile of an ascending slice: element `ceil(p·n) - 1`.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "percentile {p} outside (0, 1)"
        )));
    }
    let rank = (p * sorted.len() as f64 - RANK_SLACK).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(sorted.len()) - 1])
}

/// Nearest-rank sample percentile.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, p)
}

/// Level reached or exceeded by a fraction `q` of the samples, i.e. the
/// `(1 - q)` sample percentile. "90% exceedance" is the 10th percentile.
pub fn exceedance(samples: &[f64], q: f64) -> Result<f64> {
    percentile(samples, 1.0 - q)
}

/// Empirical CDF of an ascending sample evaluated at `points` evenly spaced
/// quantile levels, as `(value, cumulative fraction)` pairs.
pub fn cdf_points(sorted: &[f64], points: usize) -> Vec<(f64, f64)> {
    if sorted.is_empty() || points == 0 {
        return Vec::new();
    }
    let n = sorted.len();
    let points = points.min(n);
    (1..=points)
        .map(|k| {
            let idx = (k * n).div_ceil(points) - 1;
            (sorted[idx], (idx + 1) as f64 / n as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// One per MS per replica, replicas in index order.
    pub sinr_samples: Vec<f64>,
    pub se_samples: Vec<f64>,
    pub p50_sinr: f64,
    /// 90th sample percentile (upper tail).
    pub p90_sinr: f64,
    /// Level reached by 90% of MSs (10th sample percentile).
    pub x90_sinr: f64,
    /// Arithmetic mean of the dB samples.
    pub mean_sinr: f64,
    pub p50_se: f64,
    pub p90_se: f64,
    pub x90_se: f64,
    pub mean_se: f64,
    pub failure_ratio_mean: f64,
    /// `None` if no replica had a co-channel pair.
    pub avg_min_cochannel_distance_mean: Option<f64>,
    pub n_samples: usize,
}

impl MetricsReport {
    /// Aggregates per-replica results. Percentiles and means are taken over
    /// sorted data, so the result does not depend on replica order.
    pub fn from_parts(
        sinr_samples: Vec<f64>,
        se_samples: Vec<f64>,
        failure_ratios: &[f64],
        cochannel_distances: &[Option<f64>],
    ) -> Result<Self> {
        let mut sinr_sorted = sinr_samples.clone();
        sinr_sorted.sort_by(f64::total_cmp);
        let mut se_sorted = se_samples.clone();
        se_sorted.sort_by(f64::total_cmp);
        let mut fr = failure_ratios.to_vec();
        fr.sort_by(f64::total_cmp);
        let mut dist: Vec<f64> = cochannel_distances.iter().flatten().copied().collect();
        dist.sort_by(f64::total_cmp);

        Ok(Self {
            p50_sinr: percentile_sorted(&sinr_sorted, 0.5)?,
            p90_sinr: percentile_sorted(&sinr_sorted, 0.9)?,
            x90_sinr: percentile_sorted(&sinr_sorted, 1.0 - 0.9)?,
            mean_sinr: compensated_mean(&sinr_sorted).ok_or(Error::EmptySamples)?,
            p50_se: percentile_sorted(&se_sorted, 0.5)?,
            p90_se: percentile_sorted(&se_sorted, 0.9)?,
            x90_se: percentile_sorted(&se_sorted, 1.0 - 0.9)?,
            mean_se: compensated_mean(&se_sorted).ok_or(Error::EmptySamples)?,
            failure_ratio_mean: compensated_mean(&fr).unwrap_or(0.0),
            avg_min_cochannel_distance_mean: compensated_mean(&dist),
            n_samples: sinr_samples.len(),
            sinr_samples,
            se_samples,
        })
    }

    /// `(sinr_db, se)` at the statistic used for QoS targets.
    pub fn at(&self, stat: TargetPercentile) -> (f64, f64) {
        match stat {
            TargetPercentile::P50 => (self.p50_sinr, self.p50_se),
            TargetPercentile::P90 => (self.x90_sinr, self.x90_se),
        }
    }

    /// True when both reports hold exactly the same bits.
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        let scalars = |r: &Self| {
            [
                r.p50_sinr,
                r.p90_sinr,
                r.x90_sinr,
                r.mean_sinr,
                r.p50_se,
                r.p90_se,
                r.x90_se,
                r.mean_se,
                r.failure_ratio_mean,
                r.avg_min_cochannel_distance_mean.unwrap_or(f64::NAN),
            ]
            .map(f64::to_bits)
        };
        bits(&self.sinr_samples) == bits(&other.sinr_samples)
            && bits(&self.se_samples) == bits(&other.se_samples)
            && scalars(self) == scalars(other)
            && self.n_samples == other.n_samples
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_examples() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.5).unwrap(), 5.0);
        assert_eq!(exceedance(&v, 0.9).unwrap(), 1.0);
        assert_eq!(percentile(&v, 0.9).unwrap(), 9.0);
        assert_eq!(percentile(&v, 0.01).unwrap(), 1.0);
        assert_eq!(percentile(&v, 0.99).unwrap(), 10.0);
        assert_eq!(percentile(&[], 0.5), Err(Error::EmptySamples));
        assert!(percentile(&v, 0.0).is_err());
        assert!(percentile(&v, 1.0).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut v = vec![1.0e16];
        v.extend(std::iter::repeat_n(1.0, 1000));
        v.push(-1.0e16);
        assert_eq!(compensated_sum(v.iter().copied()), 1000.0);
    }

    #[test]
    fn cdf_ends_at_one() {
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        let c = cdf_points(&v, 101);
        assert_eq!(c.len(), 101);
        assert_eq!(c.last().unwrap(), &(999.0, 1.0));
        assert!(c.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        assert_eq!(cdf_points(&v[..3], 101).len(), 3);
    }

    #[test]
    fn report_orders_percentiles() {
        let sinr: Vec<f64> = (0..100).map(|i| f64::from(i) - 20.0).collect();
        let se: Vec<f64> = sinr
            .iter()
            .map(|&s| crate::radio::spectral_efficiency(s, None))
            .collect();
        let r = MetricsReport::from_parts(sinr, se, &[0.25, 0.75], &[Some(10.0), None]).unwrap();
        assert!(r.x90_sinr <= r.p50_sinr && r.p50_sinr <= r.p90_sinr);
        assert!(r.x90_se <= r.p50_se && r.p50_se <= r.p90_se);
        assert_eq!(r.failure_ratio_mean, 0.5);
        assert_eq!(r.avg_min_cochannel_distance_mean, Some(10.0));
        assert_eq!(r.n_samples, 100);
        assert!(r.bitwise_eq(&r.clone()));
    }
}
