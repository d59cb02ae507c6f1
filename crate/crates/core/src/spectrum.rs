//! Channel bookkeeping for the femto tier.
//!
//! The femto pool for an area is what dynamic FFR leaves after removing the
//! macro bands in use there. The pool is cut into disjoint per-cluster channel
//! sets; whatever does not fill a whole set becomes the reserve list.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::geometry::MobileStation;
use crate::radio::{sinr, LinkSample};

pub const TOTAL_CHANNELS: usize = 50;
pub const CHANNEL_WIDTH_HZ: f64 = 180_000.0;
/// Upper bound on femto-tier channels in the experimental area.
pub const MAX_FEMTO_CHANNELS: usize = 20;

pub type ChannelIndex = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub index: ChannelIndex,
    pub width_hz: f64,
}

impl Channel {
    pub fn all(total: usize) -> Vec<Channel> {
        (0..total)
            .map(|index| Channel {
                index,
                width_hz: CHANNEL_WIDTH_HZ,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Inner,
    Outer,
}

/// Band plan for one macrocell: band 0 is the inner-cell band `S`, the others
/// are the outer-cell bands `A`, `B`, `C` shared out among the sectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FfrLayout {
    pub n_bands: usize,
    pub inner_band: usize,
    /// Macro band used by the outer-cell users of each sector.
    pub outer_band_of_sector: Vec<usize>,
}

impl Default for FfrLayout {
    /// Sector 0 uses C, sector 1 uses A, sector 2 uses B.
    fn default() -> Self {
        Self {
            n_bands: 4,
            inner_band: 0,
            outer_band_of_sector: vec![3, 1, 2],
        }
    }
}

impl FfrLayout {
    pub fn n_sectors(&self) -> usize {
        self.outer_band_of_sector.len()
    }

    pub fn band_name(band: usize) -> String {
        match band {
            0 => "S".to_string(),
            1 => "A".to_string(),
            2 => "B".to_string(),
            3 => "C".to_string(),
            b => format!("band{b}"),
        }
    }

    /// Contiguous block of channel indices carried by `band`.
    pub fn band_channels(&self, band: usize, all_channels: usize) -> std::ops::Range<ChannelIndex> {
        let lo = band * all_channels / self.n_bands;
        let hi = (band + 1) * all_channels / self.n_bands;
        lo..hi
    }

    fn band_of(&self, channel: ChannelIndex, all_channels: usize) -> usize {
        (0..self.n_bands)
            .find(|&b| self.band_channels(b, all_channels).contains(&channel))
            .expect("channel within range")
    }
}

/// Channels the femto tier may use in `sector`/`region`.
pub fn ffr_femto_pool(
    layout: &FfrLayout,
    sector: usize,
    region: Region,
    all_channels: usize,
) -> Result<Vec<ChannelIndex>> {
    if sector >= layout.n_sectors() {
        return Err(invalid(format!(
            "sector {sector} out of range (layout has {})",
            layout.n_sectors()
        )));
    }
    let macro_outer = layout.outer_band_of_sector[sector];
    let barred: BTreeSet<usize> = match region {
        Region::Outer => [macro_outer].into(),
        Region::Inner => [layout.inner_band, macro_outer].into(),
    };
    Ok((0..all_channels)
        .filter(|&c| !barred.contains(&layout.band_of(c, all_channels)))
        .collect())
}

/// Femto-tier channels for a scenario area: the first `channels` of the outer
/// region pool of sector 0.
pub fn scenario_pool(channels: usize) -> Result<Vec<ChannelIndex>> {
    let pool = ffr_femto_pool(&FfrLayout::default(), 0, Region::Outer, TOTAL_CHANNELS)?;
    if channels > pool.len() {
        return Err(Error::InsufficientChannels {
            needed: channels,
            available: pool.len(),
        });
    }
    Ok(pool[..channels].to_vec())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelPool {
    pub femto_available: BTreeSet<ChannelIndex>,
    pub reserve: BTreeSet<ChannelIndex>,
    /// Indexed by cluster.
    pub cluster_sets: Vec<Vec<ChannelIndex>>,
    pub set_size: usize,
}

impl ChannelPool {
    pub fn n_clusters(&self) -> usize {
        self.cluster_sets.len()
    }

    pub fn cluster_set(&self, cluster: usize) -> &[ChannelIndex] {
        &self.cluster_sets[cluster]
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (k, set) in self.cluster_sets.iter().enumerate() {
            for c in set {
                if !self.femto_available.contains(c) {
                    return Err(invalid(format!("cluster {k} channel {c} outside the pool")));
                }
                if !seen.insert(*c) {
                    return Err(invalid(format!("channel {c} appears in two cluster sets")));
                }
            }
        }
        if let Some(c) = self.reserve.intersection(&seen).next() {
            return Err(invalid(format!(
                "reserve channel {c} is also a cluster channel"
            )));
        }
        if !self.reserve.is_subset(&self.femto_available) {
            return Err(invalid("reserve list not contained in the pool"));
        }
        Ok(())
    }

    /// Debug dump: `cluster_id,channel_index` rows then a `reserve,channel_index` section.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\ncluster_id,channel_index\n", crate::CSV_VERSION_LINE);
        for (k, set) in self.cluster_sets.iter().enumerate() {
            for c in set {
                let _ = writeln!(out, "{k},{c}");
            }
        }
        out.push_str("reserve,channel_index\n");
        for c in &self.reserve {
            let _ = writeln!(out, "reserve,{c}");
        }
        out
    }
}

/// Splits the first `n_vc * set_size` channels of `pool` into `n_vc`
/// contiguous sets; the remainder becomes the reserve list.
pub fn build_cluster_sets(
    pool: &[ChannelIndex],
    n_vc: usize,
    set_size: usize,
) -> Result<ChannelPool> {
    if n_vc == 0 || set_size == 0 {
        return Err(invalid("n_vc and set_size must be at least 1"));
    }
    let available: BTreeSet<ChannelIndex> = pool.iter().copied().collect();
    if available.len() != pool.len() {
        return Err(invalid("pool has duplicate channels"));
    }
    let needed = n_vc * set_size;
    if needed > pool.len() {
        return Err(Error::InsufficientChannels {
            needed,
            available: pool.len(),
        });
    }
    let ordered: Vec<ChannelIndex> = available.iter().copied().collect();
    let cluster_sets = ordered[..needed]
        .chunks(set_size)
        .map(<[usize]>::to_vec)
        .collect();
    let reserve = ordered[needed..].iter().copied().collect();
    Ok(ChannelPool {
        femto_available: available,
        reserve,
        cluster_sets,
        set_size,
    })
}

/// Reserve list maintenance: `reserve := (reserve ∪ released) \ reclaimed`.
///
/// Released channels that belong to a cluster set leave it; released channels
/// from outside the pool (idle macro channels) join the pool.
pub fn update_reserve(
    pool: &ChannelPool,
    released: &BTreeSet<ChannelIndex>,
    reclaimed: &BTreeSet<ChannelIndex>,
) -> Result<ChannelPool> {
    if let Some(c) = released.intersection(reclaimed).next() {
        return Err(invalid(format!("channel {c} both released and reclaimed")));
    }
    let mut next = pool.clone();
    for &c in released {
        for set in &mut next.cluster_sets {
            set.retain(|&x| x != c);
        }
        next.femto_available.insert(c);
        next.reserve.insert(c);
    }
    for &c in reclaimed {
        if !next.reserve.remove(&c) {
            return Err(Error::NotInReserve(c));
        }
        next.femto_available.remove(&c);
    }
    next.validate()?;
    Ok(next)
}

/// Best-C/I channel for `ms`: the candidate with the highest SINR, lowest
/// index on ties.
pub fn allocate_channel_to_ms(
    ms: &MobileStation,
    candidates: &BTreeSet<ChannelIndex>,
    per_channel_links: &BTreeMap<ChannelIndex, LinkSample>,
) -> Result<ChannelIndex> {
    let mut best: Option<(ChannelIndex, f64)> = None;
    for &c in candidates {
        let link = per_channel_links
            .get(&c)
            .ok_or_else(|| invalid(format!("no link sample for channel {c} (MS {})", ms.id)))?;
        let s = sinr(link);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((c, s));
        }
    }
    best.map(|(c, _)| c)
        .ok_or_else(|| invalid(format!("MS {} has no candidate channels", ms.id)))
}
