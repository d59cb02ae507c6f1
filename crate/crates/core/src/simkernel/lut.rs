//! Look-up tables mapping (FAP density, cluster count) to achievable SINR and
//! spectral efficiency.

use std::fmt::{self, Write as _};

use crate::clustering::{PerformanceTable, TargetPercentile};
use crate::error::Result;
use crate::simkernel::{run_scenario, Algorithm, MetricsReport, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LutStat {
    /// Median.
    P50,
    /// Level reached by 90% of mobiles.
    X90,
    Mean,
}

impl LutStat {
    pub const ALL: [LutStat; 3] = [LutStat::P50, LutStat::X90, LutStat::Mean];

    fn of(self, r: &MetricsReport) -> (f64, f64) {
        match self {
            LutStat::P50 => (r.p50_sinr, r.p50_se),
            LutStat::X90 => (r.x90_sinr, r.x90_se),
            LutStat::Mean => (r.mean_sinr, r.mean_se),
        }
    }
}

impl From<TargetPercentile> for LutStat {
    fn from(t: TargetPercentile) -> Self {
        match t {
            TargetPercentile::P50 => LutStat::P50,
            TargetPercentile::P90 => LutStat::X90,
        }
    }
}

impl fmt::Display for LutStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LutStat::P50 => "p50",
            LutStat::X90 => "x90",
            LutStat::Mean => "mean",
        })
    }
}

impl std::str::FromStr for LutStat {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p50" => Ok(LutStat::P50),
            "x90" | "p90" => Ok(LutStat::X90),
            "mean" => Ok(LutStat::Mean),
            _ => Err(crate::error::invalid(format!("unknown statistic `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LutRow {
    pub algorithm: Algorithm,
    pub n_faps: usize,
    pub channels: usize,
    pub n_clusters: usize,
    pub stat: LutStat,
    pub sinr_db: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lut {
    pub rows: Vec<LutRow>,
}

impl Lut {
    pub fn from_reports<'a>(
        reports: impl IntoIterator<Item = (&'a ScenarioConfig, &'a MetricsReport)>,
    ) -> Result<Self> {
        let mut rows = Vec::new();
        for (cfg, report) in reports {
            let n_clusters = cfg.n_clusters()?;
            for stat in LutStat::ALL {
                let (sinr_db, se) = stat.of(report);
                rows.push(LutRow {
                    algorithm: cfg.algorithm,
                    n_faps: cfg.n_faps,
                    channels: cfg.channels_available,
                    n_clusters,
                    stat,
                    sinr_db,
                    se,
                });
            }
        }
        rows.sort_by(|a, b| {
            (a.algorithm, a.n_faps, a.n_clusters, a.channels, a.stat).cmp(&(
                b.algorithm,
                b.n_faps,
                b.n_clusters,
                b.channels,
                b.stat,
            ))
        });
        Ok(Self { rows })
    }

    /// Row for the fewest channels that give `n_clusters`.
    pub fn lookup(
        &self,
        algorithm: Algorithm,
        n_faps: usize,
        n_clusters: usize,
        stat: LutStat,
    ) -> Option<&LutRow> {
        self.rows
            .iter()
            .filter(|r| {
                r.algorithm == algorithm
                    && r.n_faps == n_faps
                    && r.n_clusters == n_clusters
                    && r.stat == stat
            })
            .min_by_key(|r| r.channels)
    }

    /// Smallest cluster count meeting every given target, with its channel
    /// count.
    pub fn min_clusters(
        &self,
        algorithm: Algorithm,
        n_faps: usize,
        stat: LutStat,
        sinr_target: Option<f64>,
        se_target: Option<f64>,
    ) -> Option<&LutRow> {
        self.rows
            .iter()
            .filter(|r| r.algorithm == algorithm && r.n_faps == n_faps && r.stat == stat)
            .filter(|r| {
                sinr_target.is_none_or(|t| r.sinr_db >= t) && se_target.is_none_or(|t| r.se >= t)
            })
            .min_by_key(|r| (r.n_clusters, r.channels))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{}\nalgorithm,n_faps,channels,n_clusters,stat,sinr_db,se_bpshz\n",
            crate::CSV_VERSION_LINE
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6}",
                r.algorithm, r.n_faps, r.channels, r.n_clusters, r.stat, r.sinr_db, r.se
            );
        }
        out
    }
}

impl PerformanceTable for Lut {
    fn predict(
        &self,
        n_faps: usize,
        n_clusters: usize,
        stat: TargetPercentile,
    ) -> Option<(f64, f64)> {
        self.lookup(Algorithm::Gvcf, n_faps, n_clusters, stat.into())
            .map(|r| (r.sinr_db, r.se))
    }
}

/// Runs every configuration of `sweep` and tabulates its statistics.
pub fn build_lut(sweep: &[ScenarioConfig]) -> Result<Lut> {
    let reports = sweep.iter().map(run_scenario).collect::<Result<Vec<_>>>()?;
    Lut::from_reports(sweep.iter().zip(reports.iter()))
}
