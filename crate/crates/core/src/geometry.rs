//! Node placement and inter-FAP distances.
//!
//! FAPs are dropped uniformly over a square experimental area; each FAP's
//! mobiles are dropped uniformly (by area) over its femtocell disc. All
//! placement is a pure function of the seed.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng::{self, stream};

pub const DEFAULT_SIDE_M: f64 = 200.0;
pub const DEFAULT_FEMTO_RADIUS_M: f64 = 10.0;
pub const DEFAULT_MACRO_RADIUS_M: f64 = 500.0;
pub const DEFAULT_FAP_TX_DBM: f64 = 10.0;
pub const DEFAULT_MAX_MS_PER_FAP: usize = 4;

pub type FapId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Square experimental region of one macro sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub side: f64,
    pub femto_radius: f64,
    pub macro_radius: f64,
}

impl Default for Area {
    fn default() -> Self {
        Self {
            side: DEFAULT_SIDE_M,
            femto_radius: DEFAULT_FEMTO_RADIUS_M,
            macro_radius: DEFAULT_MACRO_RADIUS_M,
        }
    }
}

impl Area {
    pub fn validate(&self) -> Result<()> {
        if !(self.side.is_finite() && self.side > 0.0) {
            return Err(invalid(format!("area side must be > 0, got {}", self.side)));
        }
        if !(self.femto_radius > 0.0 && self.femto_radius < self.macro_radius) {
            return Err(invalid(format!(
                "need 0 < femto_radius < macro_radius, got {} and {}",
                self.femto_radius, self.macro_radius
            )));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point2D) -> bool {
        (0.0..=self.side).contains(&p.x) && (0.0..=self.side).contains(&p.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobileStation {
    pub id: usize,
    pub position: Point2D,
    pub serving_fap: FapId,
    pub assigned_channel: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FapNode {
    pub id: FapId,
    pub position: Point2D,
    pub tx_power: f64,
    pub mobiles: Vec<MobileStation>,
}

/// How many mobiles each FAP serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsCount {
    /// Uniform over `1..=max` independently per FAP.
    Uniform {
        max: usize,
    },
    Fixed(usize),
}

impl Default for MsCount {
    fn default() -> Self {
        MsCount::Uniform {
            max: DEFAULT_MAX_MS_PER_FAP,
        }
    }
}

/// Drops `n_faps` FAPs i.i.d. uniform over `[0, side]²`. Mobiles are left empty;
/// see [`place_mobiles`] and [`Topology::generate`].
pub fn place_faps(
    area: &Area,
    n_faps: usize,
    tx_power: f64,
    rng_seed: u64,
) -> Result<Vec<FapNode>> {
    area.validate()?;
    if n_faps == 0 {
        return Err(invalid("n_faps must be at least 1"));
    }
    let mut rng = rng::stream_rng(rng_seed, stream::FAP_POSITIONS, 0);
    Ok((0..n_faps)
        .map(|id| {
            let x = rng.random::<f64>() * area.side;
            let y = rng.random::<f64>() * area.side;
            FapNode {
                id,
                position: Point2D::new(x, y),
                tx_power,
                mobiles: Vec::new(),
            }
        })
        .collect())
}

/// Drops `count` mobiles uniformly by area over the femtocell disc of `fap`.
/// Mobile ids are local (`0..count`); [`Topology::generate`] renumbers them.
pub fn place_mobiles(
    fap: &FapNode,
    count: usize,
    area: &Area,
    max_ms_per_fap: usize,
    rng_seed: u64,
) -> Result<Vec<MobileStation>> {
    if count == 0 || count > max_ms_per_fap {
        return Err(invalid(format!(
            "mobile count {count} outside [1, {max_ms_per_fap}]"
        )));
    }
    let mut rng = rng::rng_from_seed(rng_seed);
    Ok((0..count)
        .map(|id| {
            // r = R * sqrt(u) is uniform by area
            let r = area.femto_radius * rng.random::<f64>().sqrt();
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            MobileStation {
                id,
                position: Point2D::new(
                    fap.position.x + r * theta.cos(),
                    fap.position.y + r * theta.sin(),
                ),
                serving_fap: fap.id,
                assigned_channel: None,
            }
        })
        .collect())
}

/// Symmetric inter-FAP Euclidean distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds the matrix for one or more positions. The public operation
    /// [`distance_matrix`] additionally requires at least two.
    pub fn from_positions(positions: &[Point2D]) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("distance matrix needs at least one position"));
        }
        if let Some(p) = positions.iter().find(|p| !p.is_finite()) {
            return Err(invalid(format!("non-finite position {p:?}")));
        }
        let n = positions.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = positions[i].distance(&positions[j]);
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        Ok(Self { n, entries })
    }

    /// Builds from an explicit row-major table, checking every invariant.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(invalid("entries must be a non-empty n*n table"));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(invalid(format!("diagonal entry {i} is non-zero")));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(invalid(format!("entry ({i},{j}) = {v} is not a distance")));
                }
                if v != entries[j * n + i] {
                    return Err(invalid(format!("entry ({i},{j}) breaks symmetry")));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: FapId, j: FapId) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: FapId) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// All unordered pairs `(i, j)` with `i < j`, sorted by ascending distance
    /// and then lexicographically by index.
    pub fn sorted_pairs(&self) -> Vec<(FapId, FapId)> {
        let mut pairs = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                pairs.push((i, j));
            }
        }
        pairs.sort_by(|&(a, b), &(c, d)| {
            self.get(a, b)
                .total_cmp(&self.get(c, d))
                .then((a, b).cmp(&(c, d)))
        });
        pairs
    }
}

/// Inter-FAP distance matrix for two or more positions.
pub fn distance_matrix(positions: &[Point2D]) -> Result<DistanceMatrix> {
    if positions.len() < 2 {
        return Err(invalid(format!(
            "distance matrix needs at least 2 positions, got {}",
            positions.len()
        )));
    }
    DistanceMatrix::from_positions(positions)
}

/// Smallest distance from `candidate` to any member. Diagonal entries never
/// participate because `candidate` may not be a member.
pub fn min_distance_to_set(
    candidate: FapId,
    members: &BTreeSet<FapId>,
    d: &DistanceMatrix,
) -> Result<f64> {
    if candidate >= d.len() {
        return Err(Error::UnknownFap(candidate));
    }
    if members.is_empty() {
        return Err(invalid("member set is empty"));
    }
    if members.contains(&candidate) {
        return Err(invalid(format!(
            "candidate {candidate} is already a member"
        )));
    }
    let row = d.row(candidate);
    members.iter().try_fold(f64::INFINITY, |acc, &m| {
        row.get(m).map(|&v| acc.min(v)).ok_or(Error::UnknownFap(m))
    })
}

/// A full network drop: FAPs with their attached mobiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub area: Area,
    pub faps: Vec<FapNode>,
}

impl Topology {
    pub fn generate(
        area: &Area,
        n_faps: usize,
        ms_count: MsCount,
        tx_power: f64,
        seed: u64,
    ) -> Result<Self> {
        let max = match ms_count {
            MsCount::Uniform { max } => max,
            MsCount::Fixed(n) => n,
        };
        if max == 0 {
            return Err(invalid("mobiles per FAP must be at least 1"));
        }
        let mut faps = place_faps(area, n_faps, tx_power, seed)?;
        let mut count_rng = rng::stream_rng(seed, stream::MS_COUNTS, 0);
        let mut next_ms = 0;
        for fap in &mut faps {
            let count = match ms_count {
                MsCount::Uniform { max } => count_rng.random_range(1..=max),
                MsCount::Fixed(n) => n,
            };
            let ms_seed = rng::derive_seed(seed, stream::MS_POSITIONS, fap.id as u64);
            let mut mobiles = place_mobiles(fap, count, area, max, ms_seed)?;
            for ms in &mut mobiles {
                ms.id = next_ms;
                next_ms += 1;
            }
            fap.mobiles = mobiles;
        }
        Ok(Self { area: *area, faps })
    }

    pub fn n_faps(&self) -> usize {
        self.faps.len()
    }

    pub fn n_mobiles(&self) -> usize {
        self.faps.iter().map(|f| f.mobiles.len()).sum()
    }

    pub fn positions(&self) -> Vec<Point2D> {
        self.faps.iter().map(|f| f.position).collect()
    }

    pub fn distance_matrix(&self) -> Result<DistanceMatrix> {
        DistanceMatrix::from_positions(&self.positions())
    }

    pub fn mobiles(&self) -> impl Iterator<Item = &MobileStation> {
        self.faps.iter().flat_map(|f| f.mobiles.iter())
    }

    /// Topology CSV: a FAP section `fap_id,x_m,y_m,tx_dbm,n_ms` followed by a
    /// mobile section `ms_id,fap_id,x_m,y_m`, coordinates at 9 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(crate::CSV_VERSION_LINE);
        out.push('\n');
        out.push_str(FAP_HEADER);
        out.push('\n');
        for f in &self.faps {
            let _ = writeln!(
                out,
                "{},{:.9},{:.9},{:.9},{}",
                f.id,
                f.position.x,
                f.position.y,
                f.tx_power,
                f.mobiles.len()
            );
        }
        out.push_str(MS_HEADER);
        out.push('\n');
        for ms in self.mobiles() {
            let _ = writeln!(
                out,
                "{},{},{:.9},{:.9}",
                ms.id, ms.serving_fap, ms.position.x, ms.position.y
            );
        }
        out
    }

    /// Parses [`Topology::to_csv`] output. The area is not part of the file and
    /// is supplied by the caller.
    pub fn from_csv(text: &str, area: Area) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        match lines.next() {
            Some((_, FAP_HEADER)) => {}
            Some((line, other)) => {
                return Err(csv_err(
                    line,
                    format!("expected header `{FAP_HEADER}`, got `{other}`"),
                ))
            }
            None => return Err(csv_err(0, "empty topology file")),
        }

        let mut faps: Vec<FapNode> = Vec::new();
        let mut expected_ms: Vec<usize> = Vec::new();
        let mut in_ms = false;
        for (line, l) in lines {
            if l == MS_HEADER {
                in_ms = true;
                continue;
            }
            let cols: Vec<&str> = l.split(',').collect();
            if !in_ms {
                if cols.len() != 5 {
                    return Err(csv_err(line, "FAP row needs 5 columns"));
                }
                let id: usize = parse_col(line, cols[0])?;
                if id != faps.len() {
                    return Err(csv_err(line, "FAP ids must be dense and ordered"));
                }
                faps.push(FapNode {
                    id,
                    position: Point2D::new(parse_col(line, cols[1])?, parse_col(line, cols[2])?),
                    tx_power: parse_col(line, cols[3])?,
                    mobiles: Vec::new(),
                });
                expected_ms.push(parse_col(line, cols[4])?);
            } else {
                if cols.len() != 4 {
                    return Err(csv_err(line, "mobile row needs 4 columns"));
                }
                let id: usize = parse_col(line, cols[0])?;
                let fap: usize = parse_col(line, cols[1])?;
                let position = Point2D::new(parse_col(line, cols[2])?, parse_col(line, cols[3])?);
                let node = faps
                    .get_mut(fap)
                    .ok_or_else(|| csv_err(line, format!("unknown FAP {fap}")))?;
                node.mobiles.push(MobileStation {
                    id,
                    position,
                    serving_fap: fap,
                    assigned_channel: None,
                });
            }
        }
        for (f, &n) in faps.iter().zip(&expected_ms) {
            if f.mobiles.len() != n {
                return Err(csv_err(
                    0,
                    format!(
                        "FAP {} declares {} mobiles, found {}",
                        f.id,
                        n,
                        f.mobiles.len()
                    ),
                ));
            }
            if !f.position.is_finite() {
                return Err(csv_err(
                    0,
                    format!("FAP {} has a non-finite position", f.id),
                ));
            }
        }
        Ok(Self { area, faps })
    }
}

const FAP_HEADER: &str = "fap_id,x_m,y_m,tx_dbm,n_ms";
const MS_HEADER: &str = "ms_id,fap_id,x_m,y_m";

fn csv_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Csv {
        line,
        reason: reason.into(),
    }
}

fn parse_col<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| csv_err(line, format!("cannot parse `{s}`")))
}
