//! Paired GVCF-vs-NCS comparison under common random numbers.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::simkernel::{run_scenario_detailed, ScenarioConfig, ScenarioRun};

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub left: ScenarioRun,
    pub right: ScenarioRun,
    pub delta_p50_sinr: f64,
    pub delta_x90_sinr: f64,
    pub delta_mean_sinr: f64,
    pub delta_p90_se: f64,
    pub delta_x90_se: f64,
    pub delta_mean_se: f64,
    pub delta_failure_ratio: f64,
}

fn check_pair(a: &ScenarioConfig, b: &ScenarioConfig) -> Result<()> {
    if a.with_algorithm(b.algorithm) != *b {
        return Err(Error::MismatchedPair(format!(
            "{} vs {}: configurations differ beyond the algorithm",
            a.algorithm, b.algorithm
        )));
    }
    Ok(())
}

/// Runs both sides of one pair and reports `left - right` deltas. Both sides
/// must draw identical topology and shadowing streams.
pub fn compare_pair(left: &ScenarioConfig, right: &ScenarioConfig) -> Result<ComparisonRow> {
    check_pair(left, right)?;
    let l = run_scenario_detailed(left)?;
    let r = run_scenario_detailed(right)?;
    if let Some((a, _)) = l
        .replicas
        .iter()
        .zip(&r.replicas)
        .find(|(a, b)| a.fingerprint != b.fingerprint)
    {
        return Err(Error::MismatchedPair(format!(
            "replica {} consumed different random streams",
            a.replica
        )));
    }
    let (lr, rr) = (&l.report, &r.report);
    Ok(ComparisonRow {
        delta_p50_sinr: lr.p50_sinr - rr.p50_sinr,
        delta_x90_sinr: lr.x90_sinr - rr.x90_sinr,
        delta_mean_sinr: lr.mean_sinr - rr.mean_sinr,
        delta_p90_se: lr.p90_se - rr.p90_se,
        delta_x90_se: lr.x90_se - rr.x90_se,
        delta_mean_se: lr.mean_se - rr.mean_se,
        delta_failure_ratio: lr.failure_ratio_mean - rr.failure_ratio_mean,
        left: l,
        right: r,
    })
}

pub fn compare(pairs: &[(ScenarioConfig, ScenarioConfig)]) -> Result<Vec<ComparisonRow>> {
    pairs.iter().map(|(a, b)| compare_pair(a, b)).collect()
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{}\nleft,right,n_faps,channels,n_clusters,delta_p50_sinr_db,delta_x90_sinr_db,delta_mean_sinr_db,delta_p90_se,delta_x90_se,delta_mean_se,left_failure_ratio,right_failure_ratio,delta_failure_ratio\n",
        crate::CSV_VERSION_LINE
    );
    for row in rows {
        let c = &row.left.config;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            c.algorithm,
            row.right.config.algorithm,
            c.n_faps,
            c.channels_available,
            c.n_clusters().unwrap_or(0),
            row.delta_p50_sinr,
            row.delta_x90_sinr,
            row.delta_mean_sinr,
            row.delta_p90_se,
            row.delta_x90_se,
            row.delta_mean_se,
            row.left.report.failure_ratio_mean,
            row.right.report.failure_ratio_mean,
            row.delta_failure_ratio,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkernel::Algorithm;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig {
            n_faps: 25,
            channels_available: 8,
            n_replicas: 3,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn self_comparison_is_zero() {
        let row = compare_pair(&cfg(), &cfg()).unwrap();
        for d in [
            row.delta_p50_sinr,
            row.delta_x90_sinr,
            row.delta_mean_sinr,
            row.delta_p90_se,
            row.delta_x90_se,
            row.delta_mean_se,
            row.delta_failure_ratio,
        ] {
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn mismatched_pairs_are_rejected() {
        let mut other = cfg().with_algorithm(Algorithm::Ncs);
        other.n_faps = 30;
        assert!(matches!(
            compare_pair(&cfg(), &other),
            Err(Error::MismatchedPair(_))
        ));
    }

    #[test]
    fn csv_has_fixed_width_rows() {
        let rows = compare(&[(cfg(), cfg().with_algorithm(Algorithm::Ncs))]).unwrap();
        let text = comparison_csv(&rows);
        let widths: Vec<usize> = text.lines().skip(1).map(|l| l.split(',').count()).collect();
        assert!(widths.iter().all(|&w| w == 14));
    }
}
