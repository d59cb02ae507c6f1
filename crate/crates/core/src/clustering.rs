//! Virtual clustering of FAPs (GVCF), the uncoordinated NCS baseline, the
//! structural metrics computed on an assignment, and the adaptation rules.
//!
//! GVCF walks FAP pairs in ascending distance order. While some virtual
//! cluster (VCC) is empty, each unallocated FAP seeds the lowest-indexed empty
//! cluster, so the closest pairs are split across clusters. Once every cluster
//! has a member, each further FAP joins the cluster whose nearest member is
//! farthest away (minimax), provided that distance is at least the safety
//! distance; otherwise it goes to the reserve set.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{DistanceMatrix, FapId, Point2D};
use crate::rng;
use crate::simkernel::MetricsReport;
use crate::spectrum::{ChannelPool, MAX_FEMTO_CHANNELS};

pub const DEFAULT_SAFETY_DISTANCE_M: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClusterLabel {
    Vcc(usize),
    Reserve,
    Unassigned,
}

impl fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterLabel::Vcc(k) => write!(f, "vcc:{k}"),
            ClusterLabel::Reserve => f.write_str("reserve"),
            ClusterLabel::Unassigned => f.write_str("unassigned"),
        }
    }
}

impl std::str::FromStr for ClusterLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reserve" => Ok(ClusterLabel::Reserve),
            "unassigned" => Ok(ClusterLabel::Unassigned),
            _ => s
                .strip_prefix("vcc:")
                .and_then(|k| k.parse().ok())
                .map(ClusterLabel::Vcc)
                .ok_or_else(|| invalid(format!("bad cluster label `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Indexed by FAP id.
    pub labels: Vec<ClusterLabel>,
    pub n_vc: usize,
    pub d_th: f64,
}

impl ClusterAssignment {
    pub fn n_faps(&self) -> usize {
        self.labels.len()
    }

    pub fn is_complete(&self) -> bool {
        !self.labels.contains(&ClusterLabel::Unassigned)
    }

    pub fn members(&self, cluster: usize) -> BTreeSet<FapId> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == ClusterLabel::Vcc(cluster))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn reserve(&self) -> BTreeSet<FapId> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == ClusterLabel::Reserve)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn reserve_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.reserve().len() as f64 / self.labels.len() as f64
    }

    /// Assignment dump, `fap_id,label`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\nfap_id,label\n", crate::CSV_VERSION_LINE);
        for (i, l) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "{i},{l}");
        }
        out
    }

    /// Reserve FAPs that cannot be served from the reserve list operate on a
    /// cluster's channels instead. Each is placed, in id order, in the cluster
    /// whose nearest member is farthest away, with no safety-distance check.
    /// Previously placed reserve FAPs count as members.
    pub fn fold_reserve(&self, d: &DistanceMatrix, fold: &BTreeSet<FapId>) -> ClusterAssignment {
        let mut out = self.clone();
        for &fap in fold {
            if out.labels[fap] != ClusterLabel::Reserve {
                continue;
            }
            let mins = cluster_min_distances(&out.labels, out.n_vc, d, fap);
            let k = argmax_lowest(&mins).unwrap_or(0);
            out.labels[fap] = ClusterLabel::Vcc(k);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetPercentile {
    /// Median of the sample.
    P50,
    /// Level reached in 90% of cases, i.e. the 10th sample percentile.
    P90,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GvcfConfig {
    pub d_th: f64,
    pub max_ms_per_fap: usize,
    pub se_target: Option<f64>,
    pub sinr_target: Option<f64>,
    pub percentile_for_targets: TargetPercentile,
}

impl Default for GvcfConfig {
    fn default() -> Self {
        Self {
            d_th: DEFAULT_SAFETY_DISTANCE_M,
            max_ms_per_fap: crate::geometry::DEFAULT_MAX_MS_PER_FAP,
            se_target: None,
            sinr_target: None,
            percentile_for_targets: TargetPercentile::P50,
        }
    }
}

impl GvcfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_th > 0.0 && self.d_th.is_finite()) {
            return Err(invalid(format!("d_th must be > 0, got {}", self.d_th)));
        }
        if self.max_ms_per_fap == 0 {
            return Err(invalid("max_ms_per_fap must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptationAction {
    NoChange,
    RequestChannels(usize),
    ReleaseChannels(usize),
    Recluster,
}

impl fmt::Display for AdaptationAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdaptationAction::NoChange => f.write_str("no_change"),
            AdaptationAction::RequestChannels(n) => write!(f, "request:{n}"),
            AdaptationAction::ReleaseChannels(n) => write!(f, "release:{n}"),
            AdaptationAction::Recluster => f.write_str("recluster"),
        }
    }
}

/// Number of virtual clusters for a pool: `floor(channels / max MS per FAP)`,
/// never less than one.
pub fn compute_num_clusters(n_channels_available: usize, max_ms_per_fap: usize) -> Result<usize> {
    if n_channels_available == 0 || max_ms_per_fap == 0 {
        return Err(invalid(
            "channel count and max MS per FAP must be at least 1",
        ));
    }
    Ok((n_channels_available / max_ms_per_fap).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Seeding,
    Minimax,
}

/// One allocation decision of [`gvcf_assign_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssignStep {
    pub fap: FapId,
    pub phase: Phase,
    /// Minimum distance from `fap` to each cluster at decision time (minimax
    /// phase only).
    pub min_distances: Vec<f64>,
    pub label: ClusterLabel,
}

fn cluster_min_distances(
    labels: &[ClusterLabel],
    n_vc: usize,
    d: &DistanceMatrix,
    candidate: FapId,
) -> Vec<f64> {
    let mut mins = vec![f64::INFINITY; n_vc];
    let row = d.row(candidate);
    for (j, label) in labels.iter().enumerate() {
        if let ClusterLabel::Vcc(k) = *label {
            if j != candidate {
                mins[k] = mins[k].min(row[j]);
            }
        }
    }
    mins
}

fn argmax_lowest(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(k);
        }
    }
    best
}

/// GVCF clustering. See the module docs for the procedure.
pub fn gvcf_assign(d: &DistanceMatrix, n_vc: usize, d_th: f64) -> Result<ClusterAssignment> {
    gvcf_assign_traced(d, n_vc, d_th).map(|(a, _)| a)
}

/// [`gvcf_assign`] plus the sequence of allocation decisions.
pub fn gvcf_assign_traced(
    d: &DistanceMatrix,
    n_vc: usize,
    d_th: f64,
) -> Result<(ClusterAssignment, Vec<AssignStep>)> {
    if n_vc == 0 {
        return Err(invalid("n_vc must be at least 1"));
    }
    if !(d_th >= 0.0) {
        return Err(invalid(format!("d_th must be >= 0, got {d_th}")));
    }
    let n = d.len();
    let mut labels = vec![ClusterLabel::Unassigned; n];
    let mut filled = 0usize;
    let mut steps = Vec::with_capacity(n);

    let mut allocate = |fap: FapId, labels: &mut Vec<ClusterLabel>, steps: &mut Vec<AssignStep>| {
        if labels[fap] != ClusterLabel::Unassigned {
            return;
        }
        if filled < n_vc {
            // clusters are seeded in index order, so the vacant one with the
            // lowest index is `filled`
            labels[fap] = ClusterLabel::Vcc(filled);
            filled += 1;
            steps.push(AssignStep {
                fap,
                phase: Phase::Seeding,
                min_distances: Vec::new(),
                label: labels[fap],
            });
            return;
        }
        let mins = cluster_min_distances(labels, n_vc, d, fap);
        let k = argmax_lowest(&mins).expect("n_vc >= 1");
        labels[fap] = if mins[k] >= d_th {
            ClusterLabel::Vcc(k)
        } else {
            ClusterLabel::Reserve
        };
        steps.push(AssignStep {
            fap,
            phase: Phase::Minimax,
            min_distances: mins,
            label: labels[fap],
        });
    };

    for (i, j) in d.sorted_pairs() {
        allocate(i, &mut labels, &mut steps);
        allocate(j, &mut labels, &mut steps);
    }
    // only a lone FAP has no pair
    for fap in 0..n {
        allocate(fap, &mut labels, &mut steps);
    }

    Ok((ClusterAssignment { labels, n_vc, d_th }, steps))
}

/// Non-clustering baseline: every FAP picks one of `n_sets` channel sets
/// uniformly at random.
pub fn ncs_assign(n_faps: usize, n_sets: usize, rng_seed: u64) -> Result<ClusterAssignment> {
    if n_sets == 0 {
        return Err(invalid("n_sets must be at least 1"));
    }
    let mut rng = rng::rng_from_seed(rng_seed);
    let labels = (0..n_faps)
        .map(|_| ClusterLabel::Vcc(rng.random_range(0..n_sets)))
        .collect();
    Ok(ClusterAssignment {
        labels,
        n_vc: n_sets,
        d_th: 0.0,
    })
}

/// Distance from each non-reserve FAP to its nearest co-cluster FAP; `None`
/// for FAPs alone in their cluster.
fn nearest_cochannel(a: &ClusterAssignment, d: &DistanceMatrix) -> Vec<Option<f64>> {
    a.labels
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l, ClusterLabel::Vcc(_)))
        .map(|(i, li)| {
            a.labels
                .iter()
                .enumerate()
                .filter(|&(j, lj)| j != i && lj == li)
                .map(|(j, _)| d.get(i, j))
                .reduce(f64::min)
        })
        .collect()
}

/// Fraction of non-reserve FAPs whose nearest co-cluster FAP is closer than
/// `d_th`.
pub fn failure_ratio(assignment: &ClusterAssignment, d: &DistanceMatrix, d_th: f64) -> f64 {
    let nearest = nearest_cochannel(assignment, d);
    if nearest.is_empty() {
        return 0.0;
    }
    let failed = nearest
        .iter()
        .filter(|n| n.is_some_and(|v| v < d_th))
        .count();
    failed as f64 / nearest.len() as f64
}

/// Mean over non-reserve, non-singleton FAPs of the distance to the nearest
/// co-cluster FAP. `None` when every cluster is a singleton.
pub fn avg_min_cochannel_distance(
    assignment: &ClusterAssignment,
    d: &DistanceMatrix,
) -> Option<f64> {
    let values: Vec<f64> = nearest_cochannel(assignment, d)
        .into_iter()
        .flatten()
        .collect();
    if values.is_empty() {
        return None;
    }
    Some(crate::simkernel::metrics::compensated_sum(values.iter().copied()) / values.len() as f64)
}

/// Predicted performance of a cluster count, as recorded in a look-up table.
pub trait PerformanceTable {
    /// `(sinr_db, se_bpshz)` for GVCF at `n_faps` with `n_clusters` clusters.
    fn predict(
        &self,
        n_faps: usize,
        n_clusters: usize,
        stat: TargetPercentile,
    ) -> Option<(f64, f64)>;
}

fn targets_met(cfg: &GvcfConfig, sinr: f64, se: f64) -> bool {
    cfg.sinr_target.is_none_or(|t| sinr >= t) && cfg.se_target.is_none_or(|t| se >= t)
}

/// One evaluation round of the adaptation phase.
///
/// * clusters out of step with the pool (channels arrived or left) → `Recluster`
/// * target unmet and the pool can take another channel set → `RequestChannels`
/// * target met and the table says one cluster fewer still meets it → `ReleaseChannels`
pub fn adapt(
    current: &ClusterAssignment,
    report: &MetricsReport,
    cfg: &GvcfConfig,
    pool: &ChannelPool,
    table: &dyn PerformanceTable,
) -> AdaptationAction {
    let pool_size = pool.femto_available.len();
    if pool_size > 0 {
        if let Ok(expected) = compute_num_clusters(pool_size, cfg.max_ms_per_fap) {
            if expected != current.n_vc {
                return AdaptationAction::Recluster;
            }
        }
    }
    if cfg.se_target.is_none() && cfg.sinr_target.is_none() {
        return AdaptationAction::NoChange;
    }
    let step = cfg.max_ms_per_fap;
    let (sinr, se) = report.at(cfg.percentile_for_targets);
    if !targets_met(cfg, sinr, se) {
        if pool_size + step <= MAX_FEMTO_CHANNELS {
            return AdaptationAction::RequestChannels(step);
        }
        return AdaptationAction::NoChange;
    }
    if current.n_vc > 1 {
        let fewer = table.predict(
            current.n_faps(),
            current.n_vc - 1,
            cfg.percentile_for_targets,
        );
        if fewer.is_some_and(|(s, e)| targets_met(cfg, s, e)) {
            return AdaptationAction::ReleaseChannels(step);
        }
    }
    AdaptationAction::NoChange
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologyEvent {
    FapJoined { position: Point2D, n_ms: usize },
    FapLeft(FapId),
    MsCountChanged { fap: FapId, n_ms: usize },
}

/// The clustering-relevant view of a live network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub positions: Vec<Point2D>,
    pub ms_counts: Vec<usize>,
    pub channels_available: usize,
    pub cfg: GvcfConfig,
    /// Use the current largest MS count instead of the provisioned maximum
    /// when sizing clusters.
    pub instantaneous_max: bool,
    pub assignment: Option<ClusterAssignment>,
}

impl NetworkState {
    pub fn new(
        positions: Vec<Point2D>,
        ms_counts: Vec<usize>,
        channels_available: usize,
        cfg: GvcfConfig,
    ) -> Self {
        Self {
            positions,
            ms_counts,
            channels_available,
            cfg,
            instantaneous_max: false,
            assignment: None,
        }
    }

    pub fn n_vc(&self) -> Result<usize> {
        let max_ms = if self.instantaneous_max {
            self.ms_counts.iter().copied().max().unwrap_or(1)
        } else {
            self.cfg.max_ms_per_fap
        };
        compute_num_clusters(self.channels_available, max_ms)
    }

    pub fn recluster(&mut self) -> Result<ClusterAssignment> {
        let a = if self.positions.is_empty() {
            ClusterAssignment {
                labels: Vec::new(),
                n_vc: self.n_vc()?,
                d_th: self.cfg.d_th,
            }
        } else {
            let d = DistanceMatrix::from_positions(&self.positions)?;
            gvcf_assign(&d, self.n_vc()?, self.cfg.d_th)?
        };
        self.assignment = Some(a.clone());
        Ok(a)
    }
}

/// Applies a join/leave/MS-count event and re-clusters from scratch. FAP ids
/// stay dense: when a FAP leaves, the ones above it shift down by one.
pub fn handle_topology_change(
    event: &TopologyEvent,
    state: &mut NetworkState,
) -> Result<ClusterAssignment> {
    match *event {
        TopologyEvent::FapJoined { position, n_ms } => {
            if !position.is_finite() {
                return Err(invalid("joining FAP has a non-finite position"));
            }
            state.positions.push(position);
            state.ms_counts.push(n_ms);
        }
        TopologyEvent::FapLeft(fap) => {
            if fap >= state.positions.len() {
                return Err(Error::UnknownFap(fap));
            }
            state.positions.remove(fap);
            state.ms_counts.remove(fap);
        }
        TopologyEvent::MsCountChanged { fap, n_ms } => {
            let slot = state.ms_counts.get_mut(fap).ok_or(Error::UnknownFap(fap))?;
            *slot = n_ms;
        }
    }
    state.recluster()
}
