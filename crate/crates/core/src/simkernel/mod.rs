//! Monte-Carlo scenario runner.
//!
//! A replica drops a topology, clusters it (GVCF or NCS), gives every mobile
//! its best-C/I channel from its FAP's channel set and evaluates the downlink
//! SINR against every other FAP transmitting on that channel. Replicas are
//! independent and run in parallel; results are merged in replica order.

pub mod adaptive;
pub mod compare;
pub mod lut;
pub mod metrics;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use rayon::prelude::*;

use crate::clustering::{
    avg_min_cochannel_distance, compute_num_clusters, failure_ratio, gvcf_assign, ncs_assign,
    ClusterAssignment, ClusterLabel, GvcfConfig,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Area, DistanceMatrix, MsCount, Topology, DEFAULT_FAP_TX_DBM};
use crate::radio::{
    noise_power, received_power, sinr, spectral_efficiency, LinkSample, RadioParams,
};
use crate::rng::{self, stream};
use crate::spectrum::{
    allocate_channel_to_ms, build_cluster_sets, scenario_pool, ChannelIndex, ChannelPool,
    TOTAL_CHANNELS,
};

pub use metrics::{exceedance, percentile, MetricsReport};

pub const DEFAULT_REPLICAS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Gvcf,
    Ncs,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Gvcf => "GVCF",
            Algorithm::Ncs => "NCS",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gvcf" => Ok(Algorithm::Gvcf),
            "ncs" => Ok(Algorithm::Ncs),
            _ => Err(invalid(format!(
                "unknown algorithm `{s}` (expected gvcf or ncs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub area: Area,
    pub n_faps: usize,
    pub channels_available: usize,
    pub algorithm: Algorithm,
    pub n_replicas: usize,
    pub base_seed: u64,
    pub radio: RadioParams,
    pub gvcf: GvcfConfig,
    pub fap_tx_dbm: f64,
    pub ms_per_fap: MsCount,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area: Area::default(),
            n_faps: 50,
            channels_available: 20,
            algorithm: Algorithm::Gvcf,
            n_replicas: DEFAULT_REPLICAS,
            base_seed: 1,
            radio: RadioParams::default(),
            gvcf: GvcfConfig::default(),
            fap_tx_dbm: DEFAULT_FAP_TX_DBM,
            ms_per_fap: MsCount::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.area.validate()?;
        self.radio.validate()?;
        self.gvcf.validate()?;
        if self.n_faps == 0 {
            return Err(invalid("n_faps must be at least 1"));
        }
        if self.n_replicas == 0 {
            return Err(invalid("n_replicas must be at least 1"));
        }
        if !(1..=TOTAL_CHANNELS).contains(&self.channels_available) {
            return Err(invalid(format!(
                "channels_available {} outside [1, {TOTAL_CHANNELS}]",
                self.channels_available
            )));
        }
        scenario_pool(self.channels_available)?;
        if !self.fap_tx_dbm.is_finite() {
            return Err(invalid("FAP transmit power must be finite"));
        }
        match self.ms_per_fap {
            MsCount::Fixed(n) if n == 0 || n > self.gvcf.max_ms_per_fap => Err(invalid(format!(
                "fixed MS count {n} outside [1, {}]",
                self.gvcf.max_ms_per_fap
            ))),
            MsCount::Uniform { max } if max != self.gvcf.max_ms_per_fap => {
                Err(invalid("uniform MS count must use max_ms_per_fap"))
            }
            _ => Ok(()),
        }
    }

    pub fn n_clusters(&self) -> Result<usize> {
        compute_num_clusters(self.channels_available, self.gvcf.max_ms_per_fap)
    }

    /// Cluster channel-set size: the provisioned MS maximum, or the whole
    /// pool when it is smaller than one set.
    pub fn set_size(&self) -> usize {
        self.gvcf.max_ms_per_fap.min(self.channels_available)
    }

    pub fn channel_pool(&self) -> Result<ChannelPool> {
        build_cluster_sets(
            &scenario_pool(self.channels_available)?,
            self.n_clusters()?,
            self.set_size(),
        )
    }

    pub fn replica_seed(&self, replica: usize) -> u64 {
        self.base_seed.wrapping_add(replica as u64)
    }

    pub fn topology(&self, replica: usize) -> Result<Topology> {
        Topology::generate(
            &self.area,
            self.n_faps,
            self.ms_per_fap,
            self.fap_tx_dbm,
            self.replica_seed(replica),
        )
    }

    pub fn with_algorithm(&self, algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..self.clone()
        }
    }

    pub fn with_channels(&self, channels_available: usize) -> Self {
        Self {
            channels_available,
            ..self.clone()
        }
    }
}

/// Per-replica result.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaOutcome {
    pub replica: usize,
    pub seed: u64,
    pub n_clusters: usize,
    pub ms_ids: Vec<usize>,
    pub sinr_db: Vec<f64>,
    pub se: Vec<f64>,
    pub failure_ratio: f64,
    pub avg_min_cochannel_distance: Option<f64>,
    pub reserve_fraction: f64,
    /// Hash of the topology and shadowing draws consumed by this replica.
    pub fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub replicas: Vec<ReplicaOutcome>,
    pub report: MetricsReport,
}

/// Channel sets actually used by each FAP, and the assignment they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct ServingPlan {
    pub channel_sets: Vec<Vec<ChannelIndex>>,
    /// Reserve FAPs that could not be served from the reserve list are
    /// relabelled with the cluster whose channels they use.
    pub effective: ClusterAssignment,
}

/// Reserve FAPs take channels round-robin from the reserve list when it has
/// enough distinct channels for all their mobiles; otherwise they fall back to
/// the cluster whose nearest member is farthest away.
pub fn serving_plan(
    assignment: &ClusterAssignment,
    pool: &ChannelPool,
    d: &DistanceMatrix,
    ms_counts: &[usize],
) -> ServingPlan {
    let reserve_list: Vec<ChannelIndex> = pool.reserve.iter().copied().collect();
    let mut channel_sets = vec![Vec::new(); assignment.n_faps()];
    let mut fold = BTreeSet::new();
    let mut cursor = 0usize;
    for (fap, label) in assignment.labels.iter().enumerate() {
        match *label {
            ClusterLabel::Vcc(k) => channel_sets[fap] = pool.cluster_set(k).to_vec(),
            ClusterLabel::Reserve if ms_counts[fap] <= reserve_list.len() => {
                channel_sets[fap] = (0..ms_counts[fap])
                    .map(|t| reserve_list[(cursor + t) % reserve_list.len()])
                    .collect();
                cursor = (cursor + ms_counts[fap]) % reserve_list.len();
            }
            _ => {
                fold.insert(fap);
            }
        }
    }
    let effective = assignment.fold_reserve(d, &fold);
    for &fap in &fold {
        if let ClusterLabel::Vcc(k) = effective.labels[fap] {
            channel_sets[fap] = pool.cluster_set(k).to_vec();
        }
    }
    ServingPlan {
        channel_sets,
        effective,
    }
}

fn fingerprint(topo: &Topology, shadowing: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for f in &topo.faps {
        f.position.x.to_bits().hash(&mut h);
        f.position.y.to_bits().hash(&mut h);
        for ms in &f.mobiles {
            ms.position.x.to_bits().hash(&mut h);
            ms.position.y.to_bits().hash(&mut h);
        }
    }
    for s in shadowing {
        s.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Shadowing for every (MS, FAP) link, row-major by MS id. Drawn in full so
/// both algorithms consume the same stream.
pub fn shadowing_draws(cfg: &ScenarioConfig, topo: &Topology, replica: usize) -> Vec<f64> {
    let mut rng = rng::stream_rng(cfg.replica_seed(replica), stream::SHADOWING, 0);
    let sampler = cfg.radio.shadowing();
    (0..topo.n_mobiles() * topo.n_faps())
        .map(|_| sampler.sample(&mut rng))
        .collect()
}

pub fn cluster(
    cfg: &ScenarioConfig,
    d: &DistanceMatrix,
    replica: usize,
) -> Result<ClusterAssignment> {
    let n_vc = cfg.n_clusters()?;
    match cfg.algorithm {
        Algorithm::Gvcf => gvcf_assign(d, n_vc, cfg.gvcf.d_th),
        Algorithm::Ncs => ncs_assign(
            d.len(),
            n_vc,
            rng::derive_seed(cfg.replica_seed(replica), stream::NCS_LABELS, 0),
        ),
    }
}

pub fn run_replica(cfg: &ScenarioConfig, replica: usize) -> Result<ReplicaOutcome> {
    let seed = cfg.replica_seed(replica);
    let topo = cfg.topology(replica)?;
    let d = topo.distance_matrix()?;
    let pool = cfg.channel_pool()?;
    let assignment = cluster(cfg, &d, replica)?;
    let ms_counts: Vec<usize> = topo.faps.iter().map(|f| f.mobiles.len()).collect();
    let plan = serving_plan(&assignment, &pool, &d, &ms_counts);

    let mut users: BTreeMap<ChannelIndex, Vec<usize>> = BTreeMap::new();
    for (fap, set) in plan.channel_sets.iter().enumerate() {
        for &c in set {
            users.entry(c).or_default().push(fap);
        }
    }

    let shadow = shadowing_draws(cfg, &topo, replica);
    let n_faps = topo.n_faps();
    let noise = noise_power(&cfg.radio);
    let radio = &cfg.radio;

    let n_ms = topo.n_mobiles();
    let mut ms_ids = Vec::with_capacity(n_ms);
    let mut sinr_db = Vec::with_capacity(n_ms);
    let mut se = Vec::with_capacity(n_ms);
    for fap in &topo.faps {
        let serving_set = &plan.channel_sets[fap.id];
        let mut taken = BTreeSet::new();
        for ms in &fap.mobiles {
            let link_shadow = &shadow[ms.id * n_faps..(ms.id + 1) * n_faps];
            let free: BTreeSet<ChannelIndex> = serving_set
                .iter()
                .copied()
                .filter(|c| !taken.contains(c))
                .collect();
            // more mobiles than channels: the extra ones share
            let candidates = if free.is_empty() {
                serving_set.iter().copied().collect()
            } else {
                free
            };
            let carrier = received_power(
                fap.tx_power,
                radio.signal_path_loss(ms.position.distance(&fap.position)),
                link_shadow[fap.id],
            );
            let links: BTreeMap<ChannelIndex, LinkSample> = candidates
                .iter()
                .map(|&c| {
                    let interference_powers = users[&c]
                        .iter()
                        .filter(|&&j| j != fap.id)
                        .map(|&j| {
                            let other = &topo.faps[j];
                            received_power(
                                other.tx_power,
                                radio.interference_path_loss(ms.position.distance(&other.position)),
                                link_shadow[j],
                            )
                        })
                        .collect();
                    (
                        c,
                        LinkSample {
                            carrier_power: carrier,
                            interference_powers,
                            noise_power: noise,
                        },
                    )
                })
                .collect();
            let channel = allocate_channel_to_ms(ms, &candidates, &links)?;
            taken.insert(channel);
            let s = sinr(&links[&channel]);
            ms_ids.push(ms.id);
            sinr_db.push(s);
            se.push(spectral_efficiency(s, radio.se_cap));
        }
    }

    Ok(ReplicaOutcome {
        replica,
        seed,
        n_clusters: assignment.n_vc,
        ms_ids,
        sinr_db,
        se,
        failure_ratio: failure_ratio(&plan.effective, &d, cfg.gvcf.d_th),
        avg_min_cochannel_distance: avg_min_cochannel_distance(&plan.effective, &d),
        reserve_fraction: assignment.reserve_fraction(),
        fingerprint: fingerprint(&topo, &shadow),
    })
}

pub fn report_from_replicas(replicas: &[ReplicaOutcome]) -> Result<MetricsReport> {
    let sinr = replicas
        .iter()
        .flat_map(|r| r.sinr_db.iter().copied())
        .collect();
    let se = replicas.iter().flat_map(|r| r.se.iter().copied()).collect();
    let fr: Vec<f64> = replicas.iter().map(|r| r.failure_ratio).collect();
    let dist: Vec<Option<f64>> = replicas
        .iter()
        .map(|r| r.avg_min_cochannel_distance)
        .collect();
    MetricsReport::from_parts(sinr, se, &fr, &dist)
}

/// Runs every replica (in parallel on the current rayon pool) and keeps the
/// per-replica outcomes.
pub fn run_scenario_detailed(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    cfg.validate()?;
    let replicas = (0..cfg.n_replicas)
        .into_par_iter()
        .map(|r| {
            run_replica(cfg, r).map_err(|e| Error::Replica {
                replica: r,
                seed: cfg.replica_seed(r),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = report_from_replicas(&replicas)?;
    Ok(ScenarioRun {
        config: cfg.clone(),
        replicas,
        report,
    })
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsReport> {
    run_scenario_detailed(cfg).map(|r| r.report)
}

/// Per-MS results CSV.
pub fn samples_csv(run: &ScenarioRun) -> String {
    use std::fmt::Write as _;
    let mut out = format!(
        "{}\nalgorithm,n_faps,channels,n_clusters,replica,ms_id,sinr_db,se_bpshz\n",
        crate::CSV_VERSION_LINE
    );
    let cfg = &run.config;
    for r in &run.replicas {
        for ((id, s), e) in r.ms_ids.iter().zip(&r.sinr_db).zip(&r.se) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.6},{:.6}",
                cfg.algorithm,
                cfg.n_faps,
                cfg.channels_available,
                r.n_clusters,
                r.replica,
                id,
                s,
                e
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(algorithm: Algorithm) -> ScenarioConfig {
        ScenarioConfig {
            n_faps: 30,
            channels_available: 12,
            n_replicas: 4,
            algorithm,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn lone_fap_sees_only_noise() {
        let cfg = ScenarioConfig {
            n_faps: 1,
            n_replicas: 3,
            ..ScenarioConfig::default()
        };
        let run = run_scenario_detailed(&cfg).unwrap();
        let noise = noise_power(&cfg.radio);
        for r in &run.replicas {
            let topo = cfg.topology(r.replica).unwrap();
            let shadow = shadowing_draws(&cfg, &topo, r.replica);
            let fap = &topo.faps[0];
            for (ms, &s) in fap.mobiles.iter().zip(&r.sinr_db) {
                let carrier = received_power(
                    fap.tx_power,
                    cfg.radio
                        .signal_path_loss(ms.position.distance(&fap.position)),
                    shadow[ms.id],
                );
                assert!((s - (carrier - noise)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sample_count_matches_topology() {
        let cfg = small(Algorithm::Gvcf);
        let run = run_scenario_detailed(&cfg).unwrap();
        let expected: usize = (0..cfg.n_replicas)
            .map(|r| cfg.topology(r).unwrap().n_mobiles())
            .sum();
        assert_eq!(run.report.n_samples, expected);
        assert_eq!(run.report.se_samples.len(), expected);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = small(Algorithm::Ncs);
        assert_eq!(run_scenario(&cfg).unwrap(), run_scenario(&cfg).unwrap());
    }

    #[test]
    fn arms_share_random_streams() {
        let g = run_scenario_detailed(&small(Algorithm::Gvcf)).unwrap();
        let n = run_scenario_detailed(&small(Algorithm::Ncs)).unwrap();
        for (a, b) in g.replicas.iter().zip(&n.replicas) {
            assert_eq!(a.fingerprint, b.fingerprint);
        }
    }

    #[test]
    fn reserve_served_round_robin_when_list_is_long_enough() {
        // 10 channels: 2 clusters of 4, reserve {8, 9}
        let pts: Vec<_> = [0.0, 1.0, 2.0, 3.0]
            .iter()
            .map(|&x| crate::geometry::Point2D::new(x, 0.0))
            .collect();
        let d = DistanceMatrix::from_positions(&pts).unwrap();
        let a = gvcf_assign(&d, 2, 20.0).unwrap();
        assert_eq!(a.reserve().len(), 2);
        let pool = build_cluster_sets(&(0..10).collect::<Vec<_>>(), 2, 4).unwrap();
        let plan = serving_plan(&a, &pool, &d, &[1, 1, 1, 3]);
        let reserved: Vec<usize> = a.reserve().into_iter().collect();
        // the 1-MS reserve FAP gets one reserve channel, the 3-MS one falls back
        assert_eq!(plan.channel_sets[reserved[0]].len(), 1);
        assert!(pool.reserve.contains(&plan.channel_sets[reserved[0]][0]));
        assert_eq!(plan.effective.labels[reserved[0]], ClusterLabel::Reserve);
        assert!(matches!(
            plan.effective.labels[reserved[1]],
            ClusterLabel::Vcc(_)
        ));
        assert_eq!(plan.channel_sets[reserved[1]].len(), 4);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = ScenarioConfig::default();
        cfg.n_replicas = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.channels_available = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.ms_per_fap = MsCount::Fixed(5);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn samples_csv_has_one_row_per_ms() {
        let run = run_scenario_detailed(&small(Algorithm::Gvcf)).unwrap();
        let csv = samples_csv(&run);
        assert_eq!(csv.lines().count(), 2 + run.report.n_samples);
        assert!(csv.lines().skip(2).all(|l| l.split(',').count() == 8));
    }
}
