//! The adaptation phase as a loop: evaluate the current clustering, ask
//! [`adapt`] what to do, grow or shrink the pool by one channel set, repeat.

use std::fmt;

use crate::clustering::{adapt, gvcf_assign, AdaptationAction, PerformanceTable};
use crate::error::Result;
use crate::simkernel::{run_scenario, ScenarioConfig};

/// One line of the adaptation trace, `round,action,n_vc,pool_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceLine {
    pub round: usize,
    pub action: AdaptationAction,
    pub n_vc: usize,
    pub pool_size: usize,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.round, self.action, self.n_vc, self.pool_size
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationRun {
    pub trace: Vec<TraceLine>,
    pub final_channels: usize,
    pub final_n_vc: usize,
    pub converged: bool,
}

impl AdaptationRun {
    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|l| format!("{l}\n")).collect()
    }
}

/// Starts from `cfg.channels_available` and runs at most `max_rounds`
/// evaluation rounds. The clustering under evaluation is the GVCF assignment
/// of replica 0's topology; performance is measured over all replicas.
pub fn run_adaptation(
    cfg: &ScenarioConfig,
    table: &dyn PerformanceTable,
    max_rounds: usize,
) -> Result<AdaptationRun> {
    let mut channels = cfg.channels_available;
    let mut trace = Vec::new();
    let d = cfg.topology(0)?.distance_matrix()?;
    for round in 0..max_rounds {
        let current = cfg.with_channels(channels);
        let pool = current.channel_pool()?;
        let n_vc = current.n_clusters()?;
        let assignment = gvcf_assign(&d, n_vc, current.gvcf.d_th)?;
        let report = run_scenario(&current)?;
        let action = adapt(&assignment, &report, &current.gvcf, &pool, table);
        trace.push(TraceLine {
            round,
            action,
            n_vc,
            pool_size: pool.femto_available.len(),
        });
        match action {
            AdaptationAction::NoChange => {
                return Ok(AdaptationRun {
                    trace,
                    final_channels: channels,
                    final_n_vc: n_vc,
                    converged: true,
                })
            }
            AdaptationAction::RequestChannels(n) => channels += n,
            AdaptationAction::ReleaseChannels(n) => channels = channels.saturating_sub(n).max(1),
            // every round re-clusters from the current pool
            AdaptationAction::Recluster => {}
        }
    }
    let last = cfg.with_channels(channels);
    Ok(AdaptationRun {
        trace,
        final_n_vc: last.n_clusters()?,
        final_channels: channels,
        converged: false,
    })
}
